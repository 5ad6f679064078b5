"""Command-line front end: dataset generation, cost-map precomputation,
training, evaluation, end-to-end comparison, and report rendering."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import harness
from .data import (
    encode_coords,
    generate_nav_problems,
    ingest_external,
    read_problems_jsonl,
    split_problems,
    truncate,
    write_problems_jsonl,
)
from .domains import BUILTIN_TASKS, builtin_task
from .grid import GridMap, downscale, parse_movingai, random_map
from .harness import ExperimentSpec, ResultRow, evaluate
from .mlp import MlpGoalClassifier, forward, load_model, save_model
from .recognizers import CostMapRecognizer, PlanCostRecognizer
from .search import NoiseParams


def _parse_methods(text: str) -> tuple[str, ...]:
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _load_maps(args) -> list[tuple[str, GridMap]]:
    maps: list[tuple[str, GridMap]] = []
    for path in args.maps or []:
        grid = parse_movingai(Path(path).read_text())
        target = getattr(args, "downscale", 64)
        if target and (grid.width > target or grid.height > target):
            grid = downscale(grid, min(target, grid.width), min(target, grid.height))
        maps.append((Path(path).stem, grid))
    n_random = getattr(args, "random_maps", 0) or 0
    if n_random:
        seeds = np.random.SeedSequence([args.seed, 9151]).generate_state(n_random)
        for i in range(n_random):
            maps.append(
                (
                    f"random{i:02d}",
                    random_map(args.size, args.size, density=args.density, seed=int(seeds[i])),
                )
            )
    if not maps:
        raise SystemExit("no maps: pass --maps and/or --random-maps")
    return maps


def _load_dataset(data_dir: Path):
    maps_dir = data_dir / "maps"
    domains = {
        p.stem: parse_movingai(p.read_text()) for p in sorted(maps_dir.glob("*.map"))
    }
    problems = read_problems_jsonl(data_dir / "problems.jsonl", domains)
    return domains, problems


def cmd_gen_nav(args) -> int:
    out = Path(args.out)
    (out / "maps").mkdir(parents=True, exist_ok=True)
    maps = _load_maps(args)
    map_seeds = np.random.SeedSequence(args.seed).generate_state(len(maps))
    everything = []
    for i, (map_id, grid) in enumerate(maps):
        (out / "maps" / f"{map_id}.map").write_text(grid.to_movingai())
        everything.extend(
            generate_nav_problems(
                grid,
                n_goals=args.n_goals,
                n_paths=args.n_paths,
                noise=NoiseParams(args.epsilon, args.delta, 0),
                seed=int(map_seeds[i]),
                map_id=map_id,
            )
        )
    write_problems_jsonl(everything, out / "problems.jsonl")
    print(f"wrote {len(everything)} problems over {len(maps)} maps to {out}")
    return 0


def cmd_costmap(args) -> int:
    data_dir = Path(args.data)
    out = Path(args.out or data_dir) / "costmaps"
    out.mkdir(parents=True, exist_ok=True)
    domains, problems = _load_dataset(data_dir)
    for map_id in sorted(domains):
        map_problems = [p for p in problems if p.map_id == map_id]
        if not map_problems:
            continue
        started = time.perf_counter()
        rec = CostMapRecognizer(beta=args.beta).fit(map_problems)
        harness.save_cost_maps(rec, out / f"{map_id}.npz")
        print(f"{map_id}: {len(rec.goals_)} cost maps in {time.perf_counter() - started:.3f} s")
    return 0


def cmd_train(args) -> int:
    data_dir = Path(args.data)
    out = Path(args.out or data_dir) / "models"
    out.mkdir(parents=True, exist_ok=True)
    domains, problems = _load_dataset(data_dir)
    for map_id, grid in sorted(domains.items()):
        map_problems = [p for p in problems if p.map_id == map_id]
        if not map_problems:
            continue
        train_set, _ = split_problems(map_problems, ratio=args.split_ratio, seed=args.seed)
        n_goals = len(train_set[0].goals)
        X = np.stack([encode_coords(p.observations, grid, args.max_obs) for p in train_set])
        y = np.array([p.true_goal for p in train_set])
        started = time.perf_counter()
        clf = MlpGoalClassifier(
            n_classes=n_goals,
            epochs=args.epochs,
            batch_size=args.batch_size,
            drop_rate=args.drop_rate,
            random_state=args.seed,
        ).fit(X, y)
        save_model(
            clf.model_,
            out / f"{map_id}.json",
            train_seed=args.seed,
            extra={"max_obs": args.max_obs, "n_goals": n_goals},
        )
        print(
            f"{map_id}: trained on {len(X)} examples in {time.perf_counter() - started:.1f} s, "
            f"final loss {clf.loss_trace_[-1]:.4f}"
        )
    return 0


def _eval_generated(args) -> list[ResultRow]:
    data_dir = Path(args.data)
    domains, problems = _load_dataset(data_dir)
    methods = _parse_methods(args.methods)
    rows: list[ResultRow] = []
    for map_id, grid in sorted(domains.items()):
        map_problems = [p for p in problems if p.map_id == map_id]
        if not map_problems:
            continue
        _, test_set = split_problems(map_problems, ratio=args.split_ratio, seed=args.seed)
        for method in methods:
            if method == "fc":
                model, meta = load_model(data_dir / "models" / f"{map_id}.json")
                max_obs = meta["extra"]["max_obs"]
                fn = lambda ps: np.stack(
                    [forward(model, encode_coords(p.observations, grid, max_obs)) for p in ps]
                )
            elif method == "ms":
                rec = harness.load_cost_maps(
                    data_dir / "costmaps" / f"{map_id}.npz", grid, beta=args.beta
                )
                fn = rec.predict_proba
            elif method == "rg":
                fn = PlanCostRecognizer(beta=args.beta, timeout_s=args.timeout).fit().predict_proba
            else:
                raise SystemExit(f"unknown method {method!r}")
            for truncation in (25, 50, 75, 100):
                subset = [p for p in test_set if p.truncation == truncation]
                if not subset:
                    continue
                accuracy = evaluate(fn, subset, seed=args.seed)
                rows.append(
                    ResultRow("navigation", map_id, method, truncation, accuracy,
                              len(subset), 0.0, 0.0)
                )
    return rows


def _eval_external(args) -> list[ResultRow]:
    methods = _parse_methods(args.methods)
    if set(methods) - {"rg"}:
        raise SystemExit("external datasets evaluate with --methods rg")
    problems = ingest_external(Path(args.external))
    rec = PlanCostRecognizer(beta=args.beta, timeout_s=args.timeout).fit()
    rows: list[ResultRow] = []
    for truncation in (25, 50, 75, 100):
        subset = [
            type(p)(
                domain=p.domain,
                start=p.start,
                goals=p.goals,
                true_goal=p.true_goal,
                observations=truncate(p.observations, truncation),
                truncation=truncation,
                path_id=p.path_id,
                map_id=p.map_id,
            )
            for p in problems
        ]
        accuracy = evaluate(rec, subset, seed=args.seed)
        rows.append(
            ResultRow("external", Path(args.external).name, "rg", truncation,
                      accuracy, len(subset), 0.0, 0.0)
        )
    return rows


def cmd_eval(args) -> int:
    rows = _eval_external(args) if args.external else _eval_generated(args)
    csv_text = harness.results_csv(rows)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(csv_text)
    print(csv_text, end="")
    return 0


def cmd_compare(args) -> int:
    methods = _parse_methods(args.methods)
    if args.domain == "navigation":
        spec = ExperimentSpec(
            domain="navigation",
            maps=_load_maps(args),
            methods=methods,
            n_goals=args.n_goals,
            n_paths=args.n_paths,
            epsilon=args.epsilon,
            delta=args.delta,
            seed=args.seed,
            epochs=args.epochs,
            batch_size=args.batch_size,
            beta=args.beta,
            drop_rate=args.drop_rate,
            max_obs=args.max_obs,
            timeout_s=args.timeout,
        )
        rows, audit = harness.run_navigation(spec)
    else:
        names = list(BUILTIN_TASKS) if args.domain == "tasks" else [args.domain]
        tasks = []
        for name in names:
            problem, goal_sets = builtin_task(name)
            tasks.append((name, problem, goal_sets))
        spec = ExperimentSpec(
            domain="tasks",
            tasks=tasks,
            methods=tuple(m for m in methods if m != "ms"),
            n_paths=args.n_paths,
            seed=args.seed,
            epochs=args.epochs,
            batch_size=args.batch_size,
            beta=args.beta,
            drop_rate=args.drop_rate,
            timeout_s=args.timeout,
        )
        rows, audit = harness.run_tasks(spec)
    paths = harness.write_run_artifacts(rows, audit, args.out)
    print(harness.results_csv(rows), end="")
    print((Path(args.out) / "timing.txt").read_text(), end="")
    print(f"artifacts in {Path(args.out).resolve()}")
    return 0


def cmd_report(args) -> int:
    rows = harness.parse_results_csv(Path(args.results).read_text())
    out = Path(args.out)
    written = harness.emit_plots(rows, out)
    timing = Path(args.timing) if args.timing else Path(args.results).parent / "timing.csv"
    if timing.exists():
        print(timing.read_text(), end="")
    for path in written:
        print(f"wrote {path}")
    return 0


def _add_common(sub, *flags):
    if "seed" in flags:
        sub.add_argument("--seed", type=int, default=0)
    if "noise" in flags:
        sub.add_argument("--epsilon", type=float, default=0.25)
        sub.add_argument("--delta", type=float, default=10.0)
    if "beta" in flags:
        sub.add_argument("--beta", type=float, default=1.0)
    if "split" in flags:
        sub.add_argument("--split-ratio", type=float, default=0.8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goalrec",
        description="Goal recognition benchmarks: symbolic cost-based methods vs a learned classifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-nav", help="generate a navigation dataset")
    gen.add_argument("--maps", nargs="*", help="MovingAI .map files")
    gen.add_argument("--random-maps", type=int, default=0)
    gen.add_argument("--size", type=int, default=64)
    gen.add_argument("--density", type=float, default=0.2)
    gen.add_argument("--downscale", type=int, default=64)
    gen.add_argument("--n-goals", type=int, default=5)
    gen.add_argument("--n-paths", type=int, default=100)
    gen.add_argument("--out", required=True)
    _add_common(gen, "seed", "noise")
    gen.set_defaults(func=cmd_gen_nav)

    cm = sub.add_parser("costmap", help="precompute per-goal cost maps")
    cm.add_argument("--data", required=True)
    cm.add_argument("--out")
    _add_common(cm, "beta")
    cm.set_defaults(func=cmd_costmap)

    tr = sub.add_parser("train", help="train the learned recognizer per map")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out")
    tr.add_argument("--epochs", type=int, default=15)
    tr.add_argument("--batch-size", type=int, default=32)
    tr.add_argument("--drop-rate", type=float, default=0.1)
    tr.add_argument("--max-obs", type=int, default=10)
    _add_common(tr, "seed", "split")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate methods on a dataset's test split")
    ev.add_argument("--data")
    ev.add_argument("--external", help="external task dataset directory")
    ev.add_argument("--methods", default="fc,rg,ms")
    ev.add_argument("--timeout", type=float, default=60.0)
    ev.add_argument("--out")
    _add_common(ev, "seed", "beta", "split")
    ev.set_defaults(func=cmd_eval)

    cp = sub.add_parser("compare", help="end-to-end benchmark with artifacts")
    cp.add_argument("--domain", default="navigation",
                    choices=["navigation", "tasks", *BUILTIN_TASKS])
    cp.add_argument("--maps", nargs="*")
    cp.add_argument("--random-maps", type=int, default=0)
    cp.add_argument("--size", type=int, default=64)
    cp.add_argument("--density", type=float, default=0.2)
    cp.add_argument("--downscale", type=int, default=64)
    cp.add_argument("--n-goals", type=int, default=5)
    cp.add_argument("--n-paths", type=int, default=100)
    cp.add_argument("--methods", default="fc,rg,ms")
    cp.add_argument("--epochs", type=int, default=15)
    cp.add_argument("--batch-size", type=int, default=32)
    cp.add_argument("--drop-rate", type=float, default=0.1)
    cp.add_argument("--max-obs", type=int, default=10)
    cp.add_argument("--timeout", type=float, default=60.0)
    cp.add_argument("--out", required=True)
    _add_common(cp, "seed", "noise", "beta")
    cp.set_defaults(func=cmd_compare)

    rp = sub.add_parser("report", help="re-render figures and timing from CSVs")
    rp.add_argument("--results", required=True)
    rp.add_argument("--timing")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
