"""Benchmark orchestration: run every recognizer over every domain cell,
collect tie-broken top-1 accuracy per truncation level, measure offline and
online times, and emit CSV/SVG artifacts.

Determinism contract: with fixed seeds, accuracy rows and per-problem
predictions are byte-stable across runs. Wall-clock measurements can never
be, so the results CSV keeps its timing columns empty and measured times go
to the separate timing report.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .chart import write_line_chart
from .data import (
    ActionVocab,
    RecognitionProblem,
    encode_coords,
    encode_onehot,
    generate_nav_problems,
    generate_task_problems,
    split_problems,
)
from .grid import GridMap
from .mlp import MlpGoalClassifier, predict_goal
from .recognizers import CostMapRecognizer, PlanCostRecognizer
from .search import CostField, NoiseParams

RESULTS_HEADER = "domain,map,method,truncation,accuracy,n,offline_s,online_us"
TRUNCATIONS = (25, 50, 75, 100)
NAV_HIDDEN = (200, 200, 200, 200)
TASK_HIDDEN = (256, 32)


@dataclass
class ResultRow:
    domain: str
    map_id: str
    method: str
    truncation: int
    accuracy: float
    n: int
    offline_s: float
    online_us: float
    status: str = "ok"


@dataclass
class ExperimentSpec:
    """One benchmark run: which domain cells, which methods, which seeds."""

    domain: str = "navigation"
    maps: list = field(default_factory=list)  # [(map_id, GridMap)] for navigation
    tasks: list = field(default_factory=list)  # [(name, StripsProblem, goal_sets)]
    methods: tuple[str, ...] = ("fc", "rg", "ms")
    n_goals: int = 5
    n_paths: int = 100
    epsilon: float = 0.25
    delta: float = 10.0
    seed: int = 0
    epochs: int = 15
    batch_size: int = 32
    beta: float = 1.0
    drop_rate: float = 0.1
    max_obs: int = 10
    split_ratio: float = 0.8
    timeout_s: float = 60.0

    def __post_init__(self):
        if not self.methods:
            raise ValueError("method list must be non-empty")
        unknown = set(self.methods) - {"fc", "rg", "ms"}
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if "ms" in self.methods and self.domain != "navigation":
            raise ValueError("the cost-map method only applies to navigation domains")


def evaluate(recognizer, problems: Sequence[RecognitionProblem], seed: int = 0) -> float:
    """Tie-broken top-1 accuracy of a recognizer (or probs callable).

    A NaN probability row (a timed-out prediction) counts as incorrect.
    """
    if not problems:
        raise ValueError("no problems to evaluate")
    probs_fn = getattr(recognizer, "predict_proba", recognizer)
    probs = np.asarray(probs_fn(list(problems)), dtype=float)
    rng = np.random.default_rng(seed)
    correct = 0
    for row, problem in zip(probs, problems):
        if np.isnan(row).any():
            continue
        if predict_goal(row, rng) == problem.true_goal:
            correct += 1
    return correct / len(problems)


# ---------------------------------------------------------------------------
# Method preparation: fit offline, return a per-problem probability function
# ---------------------------------------------------------------------------

def _fit_fc_navigation(spec, grid, train_problems, n_goals, fit_seed):
    started = time.perf_counter()
    X = np.stack(
        [encode_coords(p.observations, grid, spec.max_obs) for p in train_problems]
    )
    y = np.array([p.true_goal for p in train_problems])
    clf = MlpGoalClassifier(
        hidden_layer_sizes=NAV_HIDDEN,
        n_classes=n_goals,
        epochs=spec.epochs,
        batch_size=spec.batch_size,
        drop_rate=spec.drop_rate,
        random_state=fit_seed,
    ).fit(X, y)
    offline_s = time.perf_counter() - started

    def predict_one(problem):
        feats = encode_coords(problem.observations, grid, spec.max_obs)
        return clf.predict_proba(feats[None, :])[0]

    return offline_s, predict_one


def _fit_fc_task(spec, strips, train_problems, n_goals, max_len, fit_seed):
    started = time.perf_counter()
    vocab = ActionVocab.from_problem(strips)
    rows, labels = [], []
    for p in train_problems:
        shifted = encode_onehot(p.observations, vocab, max_len, augment=True)
        rows.append(shifted)
        labels.extend([p.true_goal] * len(shifted))
    X = np.vstack(rows)
    y = np.array(labels)
    clf = MlpGoalClassifier(
        hidden_layer_sizes=TASK_HIDDEN,
        n_classes=n_goals,
        epochs=spec.epochs,
        batch_size=spec.batch_size,
        drop_rate=spec.drop_rate,
        random_state=fit_seed,
    ).fit(X, y)
    offline_s = time.perf_counter() - started

    def predict_one(problem):
        feats = encode_onehot(problem.observations, vocab, max_len, augment=False)
        return clf.predict_proba(feats)[0]

    return offline_s, predict_one


def _fit_ms(spec, problems):
    started = time.perf_counter()
    rec = CostMapRecognizer(beta=spec.beta).fit(problems)
    offline_s = time.perf_counter() - started
    return offline_s, lambda problem: rec.predict_proba([problem])[0], rec


def _fit_rg(spec):
    rec = PlanCostRecognizer(beta=spec.beta, timeout_s=spec.timeout_s)
    rec.fit()
    return 0.0, lambda problem: rec.predict_proba([problem])[0]


def _score_cell(
    domain: str,
    map_id: str,
    method: str,
    predict_one: Callable[[RecognitionProblem], np.ndarray],
    test_problems: Sequence[RecognitionProblem],
    offline_s: float,
    tie_seed,
) -> tuple[list[ResultRow], list[dict]]:
    """Predict each test problem once (timed), then aggregate per truncation."""
    rng = np.random.default_rng(tie_seed)
    outcomes = []
    audit = []
    for index, problem in enumerate(test_problems):
        started = time.perf_counter()
        probs = predict_one(problem)
        elapsed_us = (time.perf_counter() - started) * 1e6
        timed_out = bool(np.isnan(probs).any())
        if timed_out:
            predicted, correct = None, False
        else:
            predicted = predict_goal(probs, rng)
            correct = predicted == problem.true_goal
        outcomes.append((problem.truncation, correct, elapsed_us, timed_out))
        audit.append(
            {
                "domain": domain,
                "map": map_id,
                "method": method,
                "index": index,
                "path_id": problem.path_id,
                "truncation": problem.truncation,
                "true_goal": problem.true_goal,
                "probs": None if timed_out else [float(v) for v in probs],
                "predicted": predicted,
                "correct": bool(correct),
                "status": "timeout" if timed_out else "ok",
                "online_us": elapsed_us,
            }
        )
    rows = []
    for truncation in TRUNCATIONS:
        cell = [o for o in outcomes if o[0] == truncation]
        if not cell:
            continue
        rows.append(
            ResultRow(
                domain=domain,
                map_id=map_id,
                method=method,
                truncation=truncation,
                accuracy=sum(1 for o in cell if o[1]) / len(cell),
                n=len(cell),
                offline_s=offline_s,
                online_us=float(np.mean([o[2] for o in cell])),
                status="timeout" if any(o[3] for o in cell) else "ok",
            )
        )
    return rows, audit


def run_navigation(spec: ExperimentSpec) -> tuple[list[ResultRow], list[dict]]:
    """Full navigation protocol: generate, split, fit per map, score per cell.

    The learned recognizer is trained separately on each map's training
    problems; symbolic methods see the same test problems. Returns per-cell
    rows plus cross-map average rows (map id "mean", unweighted over maps).
    """
    if not spec.maps:
        raise ValueError("navigation run needs at least one map")
    rows: list[ResultRow] = []
    audit: list[dict] = []
    map_seeds = np.random.SeedSequence(spec.seed).generate_state(len(spec.maps))
    for map_index, (map_id, grid) in enumerate(spec.maps):
        map_seed = int(map_seeds[map_index])
        problems = generate_nav_problems(
            grid,
            n_goals=spec.n_goals,
            n_paths=spec.n_paths,
            noise=NoiseParams(spec.epsilon, spec.delta, 0),
            seed=map_seed,
            map_id=map_id,
        )
        train_problems, test_problems = split_problems(
            problems, ratio=spec.split_ratio, seed=map_seed
        )
        for method_index, method in enumerate(spec.methods):
            if method == "fc":
                offline_s, predict_one = _fit_fc_navigation(
                    spec, grid, train_problems, spec.n_goals, fit_seed=map_seed
                )
            elif method == "ms":
                offline_s, predict_one, _ = _fit_ms(spec, problems)
            elif method == "rg":
                offline_s, predict_one = _fit_rg(spec)
            cell_rows, cell_audit = _score_cell(
                spec.domain,
                map_id,
                method,
                predict_one,
                test_problems,
                offline_s,
                tie_seed=[spec.seed, map_index, method_index],
            )
            rows.extend(cell_rows)
            audit.extend(cell_audit)
    rows.extend(_average_rows(rows, spec.domain))
    return rows, audit


def run_tasks(spec: ExperimentSpec) -> tuple[list[ResultRow], list[dict]]:
    """Task-domain protocol over desk-scale STRIPS instances.

    Observation sequences come from optimal plans with randomized
    tie-breaking; the learned recognizer trains on shift-augmented one-hot
    encodings, the plan-cost recognizer replans per prediction under the
    spec's timeout.
    """
    if not spec.tasks:
        raise ValueError("task run needs at least one task domain")
    rows: list[ResultRow] = []
    audit: list[dict] = []
    task_seeds = np.random.SeedSequence(spec.seed).generate_state(len(spec.tasks))
    for task_index, (name, strips, goal_sets) in enumerate(spec.tasks):
        task_seed = int(task_seeds[task_index])
        problems = generate_task_problems(
            strips, goal_sets, n_paths=spec.n_paths, seed=task_seed, map_id=name
        )
        max_len = max(len(p.observations) for p in problems)
        train_problems, test_problems = split_problems(
            problems, ratio=spec.split_ratio, seed=task_seed
        )
        for method_index, method in enumerate(spec.methods):
            if method == "fc":
                offline_s, predict_one = _fit_fc_task(
                    spec, strips, train_problems, len(goal_sets), max_len, fit_seed=task_seed
                )
            elif method == "rg":
                offline_s, predict_one = _fit_rg(spec)
            cell_rows, cell_audit = _score_cell(
                name,
                name,
                method,
                predict_one,
                test_problems,
                offline_s,
                tie_seed=[spec.seed, task_index, method_index],
            )
            rows.extend(cell_rows)
            audit.extend(cell_audit)
    return rows, audit


def _average_rows(rows: Sequence[ResultRow], domain: str) -> list[ResultRow]:
    """Unweighted cross-map mean per (method, truncation)."""
    singles = [r for r in rows if r.map_id != "mean"]
    out = []
    methods = sorted({r.method for r in singles})
    for method in methods:
        for truncation in TRUNCATIONS:
            cell = [r for r in singles if r.method == method and r.truncation == truncation]
            if not cell:
                continue
            out.append(
                ResultRow(
                    domain=domain,
                    map_id="mean",
                    method=method,
                    truncation=truncation,
                    accuracy=float(np.mean([r.accuracy for r in cell])),
                    n=sum(r.n for r in cell),
                    offline_s=float(np.mean([r.offline_s for r in cell])),
                    online_us=float(np.mean([r.online_us for r in cell])),
                )
            )
    return out


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

def results_csv(rows: Sequence[ResultRow], with_timing: bool = False) -> str:
    """Render rows under the fixed header, sorted for byte-stable output.

    Timing columns stay empty unless ``with_timing`` is set: measured times
    are not reproducible, and the results CSV is the byte-identical artifact.
    """
    ordered = sorted(rows, key=lambda r: (r.domain, r.map_id, r.method, r.truncation))
    lines = [RESULTS_HEADER]
    for r in ordered:
        if with_timing:
            timing = f"{r.offline_s:.6f},{r.online_us:.3f}"
        else:
            timing = ","
        lines.append(
            f"{r.domain},{r.map_id},{r.method},{r.truncation},{r.accuracy:.6f},{r.n},{timing}"
        )
    return "\n".join(lines) + "\n"


def parse_results_csv(text: str) -> list[ResultRow]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != RESULTS_HEADER:
        raise ValueError("unrecognized results CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(
            ResultRow(
                domain=parts[0],
                map_id=parts[1],
                method=parts[2],
                truncation=int(parts[3]),
                accuracy=float(parts[4]),
                n=int(parts[5]),
                offline_s=float(parts[6]) if parts[6] else 0.0,
                online_us=float(parts[7]) if parts[7] else 0.0,
            )
        )
    return rows


def timing_report(rows: Sequence[ResultRow]) -> tuple[str, str]:
    """Per-method offline/online timing summary as (text table, CSV)."""
    singles = [r for r in rows if r.map_id != "mean"]
    methods = sorted({r.method for r in singles})
    table = [f"{'method':<8}{'offline':>14}{'online':>16}"]
    csv_lines = ["method,offline_s,mean_online_us"]
    for method in methods:
        cell = [r for r in singles if r.method == method]
        offline = float(np.mean([r.offline_s for r in cell]))
        online = float(np.mean([r.online_us for r in cell]))
        table.append(f"{method:<8}{offline:>12.3f} s{online:>13.1f} us")
        csv_lines.append(f"{method},{offline:.6f},{online:.3f}")
    if not methods:
        return "", "method,offline_s,mean_online_us\n"
    return "\n".join(table) + "\n", "\n".join(csv_lines) + "\n"


def emit_plots(rows: Sequence[ResultRow], out_dir) -> list[Path]:
    """Accuracy-vs-truncation chart and CSV per domain; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    domains = sorted({r.domain for r in rows})
    for domain in domains:
        domain_rows = [r for r in rows if r.domain == domain]
        plot_rows = [r for r in domain_rows if r.map_id == "mean"] or domain_rows
        series = []
        for method in sorted({r.method for r in plot_rows}):
            points = {}
            for truncation in TRUNCATIONS:
                cell = [
                    r for r in plot_rows if r.method == method and r.truncation == truncation
                ]
                if cell:
                    points[truncation] = float(np.mean([r.accuracy for r in cell]))
            series.append((method, points))
        csv_path = out / f"fig_{domain}.csv"
        csv_path.write_text(results_csv(plot_rows))
        svg_path = out / f"fig_{domain}.svg"
        write_line_chart(
            svg_path,
            f"{domain}: accuracy vs observed prefix",
            "% of observations retained",
            "accuracy",
            list(TRUNCATIONS),
            series,
        )
        written.extend([csv_path, svg_path])
    return written


def write_run_artifacts(
    rows: Sequence[ResultRow], audit: Sequence[dict], out_dir
) -> dict[str, Path]:
    """Persist results.csv, timing artifacts, figures, and the audit log."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out / "results.csv",
        "timing_csv": out / "timing.csv",
        "timing_txt": out / "timing.txt",
        "predictions": out / "predictions.jsonl",
    }
    paths["results"].write_text(results_csv(rows))
    text, csv_text = timing_report(rows)
    paths["timing_txt"].write_text(text)
    paths["timing_csv"].write_text(csv_text)
    with open(paths["predictions"], "w") as fp:
        for record in audit:
            fp.write(json.dumps(record, sort_keys=True) + "\n")
    emit_plots(rows, out)
    return paths


# ---------------------------------------------------------------------------
# Cost-map artifacts for the piecemeal CLI workflow
# ---------------------------------------------------------------------------

def save_cost_maps(rec: CostMapRecognizer, path) -> None:
    values = np.stack([f.values for f in rec.fields_])
    goals = np.array(rec.goals_, dtype=int)
    np.savez(path, values=values, goals=goals)


def load_cost_maps(path, grid: GridMap, beta: float = 1.0) -> CostMapRecognizer:
    data = np.load(path)
    rec = CostMapRecognizer(beta=beta)
    rec.grid_ = grid
    rec.goals_ = [tuple(int(v) for v in g) for g in data["goals"]]
    rec.fields_ = [
        CostField(goal=rec.goals_[i], values=data["values"][i])
        for i in range(len(rec.goals_))
    ]
    return rec
