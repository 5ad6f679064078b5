import json

import pytest

from goalrec.cli import main
from goalrec.grid import random_map
from goalrec.harness import RESULTS_HEADER, parse_results_csv
from tests.test_strips import BLOCKS_DOMAIN


@pytest.fixture
def nav_dataset(tmp_path):
    out = tmp_path / "data"
    code = main(
        [
            "gen-nav",
            "--random-maps", "2",
            "--size", "14",
            "--density", "0.2",
            "--n-goals", "3",
            "--n-paths", "8",
            "--out", str(out),
            "--seed", "3",
        ]
    )
    assert code == 0
    return out


class TestGenNav:
    def test_writes_dataset_and_maps(self, nav_dataset):
        maps = sorted(p.name for p in (nav_dataset / "maps").glob("*.map"))
        assert maps == ["random00.map", "random01.map"]
        lines = (nav_dataset / "problems.jsonl").read_text().splitlines()
        assert len(lines) == 2 * 8 * 4
        record = json.loads(lines[0])
        assert set(record) == {
            "map_id", "start", "goals", "true_goal", "observations", "truncation", "path_id",
        }

    def test_accepts_map_files(self, tmp_path):
        grid = random_map(96, 96, density=0.1, seed=5)
        map_file = tmp_path / "big.map"
        map_file.write_text(grid.to_movingai())
        out = tmp_path / "data"
        main(
            [
                "gen-nav", "--maps", str(map_file), "--n-goals", "3", "--n-paths", "4",
                "--out", str(out), "--seed", "1",
            ]
        )
        # 96x96 input is downscaled to the default 64x64 before use
        stored = (out / "maps" / "big.map").read_text()
        assert "height 64" in stored and "width 64" in stored

    def test_requires_some_map_source(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["gen-nav", "--out", str(tmp_path / "x")])


class TestPiecemealPipeline:
    def test_costmap_train_eval(self, nav_dataset, capsys):
        assert main(["costmap", "--data", str(nav_dataset)]) == 0
        assert sorted(p.name for p in (nav_dataset / "costmaps").glob("*.npz")) == [
            "random00.npz", "random01.npz",
        ]
        assert main(
            ["train", "--data", str(nav_dataset), "--epochs", "2", "--seed", "3"]
        ) == 0
        assert sorted(p.name for p in (nav_dataset / "models").glob("*.json")) == [
            "random00.json", "random01.json",
        ]
        out_csv = nav_dataset / "results.csv"
        assert main(
            [
                "eval", "--data", str(nav_dataset), "--methods", "fc,ms,rg",
                "--seed", "3", "--out", str(out_csv),
            ]
        ) == 0
        rows = parse_results_csv(out_csv.read_text())
        assert {r.method for r in rows} == {"fc", "ms", "rg"}
        assert {r.truncation for r in rows} == {25, 50, 75, 100}
        assert all(0.0 <= r.accuracy <= 1.0 for r in rows)


class TestCompare:
    def test_navigation_compare_artifacts(self, tmp_path):
        out = tmp_path / "run"
        code = main(
            [
                "compare", "--domain", "navigation",
                "--random-maps", "2", "--size", "12", "--density", "0.15",
                "--n-goals", "3", "--n-paths", "6", "--epochs", "2",
                "--methods", "fc,ms", "--out", str(out), "--seed", "11",
            ]
        )
        assert code == 0
        for name in ("results.csv", "timing.csv", "timing.txt", "predictions.jsonl",
                     "fig_navigation.csv", "fig_navigation.svg"):
            assert (out / name).exists(), name
        text = (out / "results.csv").read_text()
        assert text.splitlines()[0] == RESULTS_HEADER

    def test_task_compare(self, tmp_path):
        out = tmp_path / "run"
        code = main(
            [
                "compare", "--domain", "blocks", "--n-paths", "6", "--epochs", "2",
                "--methods", "fc,rg", "--out", str(out), "--seed", "2",
            ]
        )
        assert code == 0
        rows = parse_results_csv((out / "results.csv").read_text())
        assert {r.method for r in rows} == {"fc", "rg"}
        assert (out / "fig_blocks.svg").exists()

    def test_repeat_run_byte_identical_results(self, tmp_path):
        args = [
            "compare", "--domain", "navigation",
            "--random-maps", "2", "--size", "12", "--density", "0.15",
            "--n-goals", "3", "--n-paths", "6", "--epochs", "2",
            "--methods", "fc,ms,rg", "--seed", "9",
        ]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "results.csv").read_bytes() == (
            tmp_path / "b" / "results.csv"
        ).read_bytes()
        assert (tmp_path / "a" / "fig_navigation.csv").read_bytes() == (
            tmp_path / "b" / "fig_navigation.csv"
        ).read_bytes()


class TestEvalExternal:
    def test_external_rg_eval(self, tmp_path, capsys):
        instance = tmp_path / "p01"
        instance.mkdir()
        (instance / "domain.pddl").write_text(BLOCKS_DOMAIN)
        (instance / "template.pddl").write_text("""
(define (problem tower)
  (:domain blocks)
  (:objects a b - block)
  (:init (ontable a) (ontable b) (clear a) (clear b) (handempty))
  (:goal (and <HYPOTHESIS>)))
""")
        (instance / "hyps.dat").write_text("(on a b)\n(on b a)\n")
        (instance / "real_hyp.dat").write_text("(on a b)\n")
        (instance / "obs.dat").write_text("(pick-up a)\n(stack a b)\n")
        out_csv = tmp_path / "ext.csv"
        code = main(
            ["eval", "--external", str(tmp_path), "--methods", "rg", "--out", str(out_csv)]
        )
        assert code == 0
        rows = parse_results_csv(out_csv.read_text())
        assert [r.truncation for r in rows] == [25, 50, 75, 100]
        # full observability on the optimal plan pins the true goal
        assert rows[-1].accuracy == 1.0

    def test_external_rejects_learned_methods(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["eval", "--external", str(tmp_path), "--methods", "fc"])


class TestReport:
    def test_report_renders_figures(self, tmp_path, capsys):
        results = tmp_path / "results.csv"
        lines = [RESULTS_HEADER]
        for method in ("fc", "ms"):
            for truncation in (25, 50, 75, 100):
                lines.append(f"navigation,mean,{method},{truncation},0.500000,10,,")
        results.write_text("\n".join(lines) + "\n")
        out = tmp_path / "figs"
        assert main(["report", "--results", str(results), "--out", str(out)]) == 0
        assert (out / "fig_navigation.svg").exists()
