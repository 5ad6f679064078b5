"""Dataset construction: navigation problems from noisy-rational walks,
truncation, train/test splits, feature encodings, and external task-domain
observation ingestion.

Generation is reproducible: one master seed fixes placement, true-goal draws,
and the per-path noise streams, so independent paths can be regenerated in
any order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path as FilePath
from typing import Iterable, Sequence

import numpy as np

from .grid import Cell, GridMap
from .search import NoiseParams, cost_field, manhattan, noisy_astar
from .strips import StripsProblem, parse_action_key, parse_pddl, plan

TRUNCATION_LEVELS = (25, 50, 75, 100)


class PlacementError(Exception):
    """Start/goal placement failed; the map is too constrained."""


@dataclass
class RecognitionProblem:
    """One recognition instance: who runs where, watched how far.

    ``domain`` is a GridMap for navigation or a StripsProblem for task
    domains. Goals are cells or frozensets of fluent ids respectively;
    observations are cells or grounded-action keys.
    """

    domain: GridMap | StripsProblem
    start: Cell | None
    goals: list
    true_goal: int
    observations: list
    truncation: int = 100
    path_id: int = 0
    map_id: str = ""

    def __post_init__(self):
        if not self.goals:
            raise ValueError("goal set must be non-empty")
        if not 0 <= self.true_goal < len(self.goals):
            raise ValueError("true_goal must index the goal set")
        if not self.observations:
            raise ValueError("observation sequence must be non-empty")


def truncate(obs: Sequence, percent: int) -> list:
    """First ceil(percent/100 * len) observations, never fewer than one."""
    if percent not in TRUNCATION_LEVELS:
        raise ValueError(f"truncation percent must be one of {TRUNCATION_LEVELS}")
    if len(obs) == 0:
        raise ValueError("cannot truncate an empty observation sequence")
    keep = max(1, math.ceil(len(obs) * percent / 100))
    return list(obs[:keep])


def _place_start_and_goals(
    grid: GridMap, n_goals: int, rng: np.random.Generator, max_tries: int = 1000
) -> tuple[Cell, list[Cell]]:
    """Rejection-sample a start and goals, spread out and mutually reachable.

    The minimum pairwise Manhattan spacing starts at (width+height)/4 and
    halves after every 200 failed draws, so crowded maps still place rather
    than erroring; start-to-goal path distance is checked against the same
    spacing with one cost-field sweep.
    """
    cells = grid.passable_cells()
    if len(cells) < n_goals + 1:
        raise PlacementError(f"map has only {len(cells)} passable cells, need {n_goals + 1}")
    spacing = (grid.width + grid.height) // 4
    for attempt in range(max_tries):
        if attempt > 0 and attempt % 200 == 0:
            spacing = max(spacing // 2, 1)
        picks = [cells[i] for i in rng.choice(len(cells), size=n_goals + 1, replace=False)]
        if any(
            manhattan(picks[i], picks[j]) < spacing
            for i in range(len(picks))
            for j in range(i + 1, len(picks))
        ):
            continue
        start, goals = picks[0], picks[1:]
        field = cost_field(grid, start)
        if all(spacing <= field.cost(g) < np.inf for g in goals):
            return start, goals
    raise PlacementError(f"no viable placement found in {max_tries} draws")


def generate_nav_problems(
    grid: GridMap,
    n_goals: int = 5,
    n_paths: int = 100,
    noise: NoiseParams = NoiseParams(),
    seed: int = 0,
    map_id: str = "",
) -> list[RecognitionProblem]:
    """Sample a start and goals, then noisy walks expanded into truncated problems.

    Each of the ``n_paths`` walks gets a uniformly drawn true goal and its own
    noise stream derived from ``seed``; every walk yields one problem per
    truncation level (25/50/75/100), all sharing a path_id.
    """
    if n_paths == 0:
        return []
    rng = np.random.default_rng(seed)
    start, goals = _place_start_and_goals(grid, n_goals, rng)
    true_goals = rng.integers(0, n_goals, size=n_paths)
    path_seeds = rng.integers(0, 2**31 - 1, size=n_paths)
    problems = []
    for i in range(n_paths):
        goal = goals[int(true_goals[i])]
        path = noisy_astar(grid, start, goal, replace(noise, seed=int(path_seeds[i])))
        walk = path.cells[1:]  # observed effects: positions after each move
        for percent in TRUNCATION_LEVELS:
            problems.append(
                RecognitionProblem(
                    domain=grid,
                    start=start,
                    goals=list(goals),
                    true_goal=int(true_goals[i]),
                    observations=truncate(walk, percent),
                    truncation=percent,
                    path_id=i,
                    map_id=map_id,
                )
            )
    return problems


def generate_task_problems(
    problem: StripsProblem,
    goal_sets: Sequence[frozenset[int]],
    n_paths: int,
    seed: int = 0,
    map_id: str = "",
) -> list[RecognitionProblem]:
    """Observation sequences for a task domain from optimal plans.

    True goals are drawn uniformly; plan diversity comes from randomized
    tie-breaking in the optimal planner, so observed agents stay rational.
    """
    if n_paths == 0:
        return []
    rng = np.random.default_rng(seed)
    true_goals = rng.integers(0, len(goal_sets), size=n_paths)
    tie_seeds = rng.integers(0, 2**31 - 1, size=n_paths)
    problems = []
    for i in range(n_paths):
        goal = goal_sets[int(true_goals[i])]
        steps = plan(problem.with_goal(goal), tie_seed=int(tie_seeds[i]))
        if not steps:
            raise ValueError("a candidate goal is already satisfied in the initial state")
        obs = [a.key for a in steps]
        for percent in TRUNCATION_LEVELS:
            problems.append(
                RecognitionProblem(
                    domain=problem,
                    start=None,
                    goals=list(goal_sets),
                    true_goal=int(true_goals[i]),
                    observations=truncate(obs, percent),
                    truncation=percent,
                    path_id=i,
                    map_id=map_id,
                )
            )
    return problems


def split_problems(
    problems: Sequence[RecognitionProblem], ratio: float = 0.8, seed: int = 0
) -> tuple[list[RecognitionProblem], list[RecognitionProblem]]:
    """Grouped train/test split: all truncations of one path stay together."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    keys = []
    seen = set()
    for p in problems:
        key = (p.map_id, p.path_id)
        if key not in seen:
            seen.add(key)
            keys.append(key)
    if len(keys) < 2:
        raise ValueError("need at least 2 underlying paths to split")
    rng = np.random.default_rng(seed)
    order = [keys[i] for i in rng.permutation(len(keys))]
    n_train = min(max(int(round(ratio * len(keys))), 1), len(keys) - 1)
    train_keys = set(order[:n_train])
    train = [p for p in problems if (p.map_id, p.path_id) in train_keys]
    test = [p for p in problems if (p.map_id, p.path_id) not in train_keys]
    return train, test


# ---------------------------------------------------------------------------
# Feature encodings
# ---------------------------------------------------------------------------

def encode_coords(obs: Sequence[Cell], grid: GridMap, max_obs: int = 10) -> np.ndarray:
    """Fixed-length coordinate features for a walk.

    Keeps min(len, max_obs) positions at evenly spaced indices that always
    include the last observation, encodes each as ((x+1)/width, (y+1)/height)
    so real positions live in (0, 1] and the (0, 0) padding is unambiguous.
    """
    if max_obs < 1:
        raise ValueError("max_obs must be at least 1")
    n = len(obs)
    if n == 0:
        raise ValueError("cannot encode an empty observation sequence")
    k = min(n, max_obs)
    features = np.zeros(2 * max_obs)
    for j in range(k):
        x, y = obs[(j + 1) * n // k - 1]
        features[2 * j] = (x + 1) / grid.width
        features[2 * j + 1] = (y + 1) / grid.height
    return features


@dataclass(frozen=True)
class ActionVocab:
    """Symbol tables for one-hot action encoding: types, objects, slot count."""

    action_names: tuple[str, ...]
    objects: tuple[str, ...]
    max_arity: int

    @classmethod
    def from_problem(cls, problem: StripsProblem) -> "ActionVocab":
        return cls(
            action_names=tuple(sorted(problem.schema_arity)),
            objects=tuple(sorted(problem.objects)),
            max_arity=max(problem.schema_arity.values(), default=0),
        )

    @property
    def width(self) -> int:
        return len(self.action_names) + self.max_arity * len(self.objects)

    def encode_action(self, key: str) -> np.ndarray:
        parts = key.strip("()").split()
        name, args = parts[0], parts[1:]
        if name not in self.action_names:
            raise ValueError(f"action name {name!r} not in vocabulary")
        if len(args) > self.max_arity:
            raise ValueError(f"action {key!r} has more arguments than any known schema")
        vec = np.zeros(self.width)
        vec[self.action_names.index(name)] = 1.0
        base = len(self.action_names)
        for slot, obj in enumerate(args):
            if obj not in self.objects:
                raise ValueError(f"object {obj!r} not in vocabulary")
            vec[base + slot * len(self.objects) + self.objects.index(obj)] = 1.0
        return vec


def encode_onehot(
    actions: Sequence[str], vocab: ActionVocab, max_len: int, augment: bool = True
) -> np.ndarray:
    """One-hot encode an action sequence into fixed-size feature rows.

    With ``augment`` the sequence is zero-padded and shifted through every
    alignment, yielding max_len - len + 1 rows (extra training data); without
    it a single left-aligned row is returned, which is what evaluation uses.
    """
    if len(actions) == 0:
        raise ValueError("cannot encode an empty observation sequence")
    if len(actions) > max_len:
        raise ValueError(f"sequence of length {len(actions)} exceeds max_len {max_len}")
    encoded = [vocab.encode_action(key) for key in actions]
    width = vocab.width
    n_shifts = max_len - len(actions) + 1 if augment else 1
    out = np.zeros((n_shifts, max_len * width))
    for shift in range(n_shifts):
        for pos, vec in enumerate(encoded):
            offset = (shift + pos) * width
            out[shift, offset : offset + width] = vec
    return out


# ---------------------------------------------------------------------------
# External task-domain datasets
# ---------------------------------------------------------------------------

def _parse_fluent(text: str) -> tuple[str, ...]:
    key = parse_action_key(text)  # same s-expression shape as an action line
    return tuple(key.strip("()").split())


def _read_lines(path: FilePath) -> list[str]:
    if not path.exists():
        raise FileNotFoundError(f"missing {path.name} in {path.parent}")
    return [line.strip() for line in path.read_text().splitlines() if line.strip()]


def _ingest_instance(directory: FilePath, path_id: int) -> RecognitionProblem:
    domain_text = (directory / "domain.pddl").read_text()
    template_path = directory / "template.pddl"
    if not template_path.exists():
        template_path = directory / "problem.pddl"
    if not template_path.exists():
        raise FileNotFoundError(f"missing template.pddl/problem.pddl in {directory}")
    problem_text = template_path.read_text()

    hyp_lines = _read_lines(directory / "hyps.dat")
    obs_lines = _read_lines(directory / "obs.dat")
    real_lines = _read_lines(directory / "real_hyp.dat")
    if len(real_lines) != 1:
        raise ValueError(f"real_hyp.dat must hold exactly one hypothesis in {directory}")

    if "<hypothesis>" in problem_text.lower():
        filler = real_lines[0].replace(",", " ")
        problem_text = problem_text.replace("<HYPOTHESIS>", filler).replace(
            "<hypothesis>", filler
        )
    strips = parse_pddl(domain_text, problem_text)

    goals = []
    for line in hyp_lines:
        atoms = [_parse_fluent(part) for part in line.split(",") if part.strip()]
        goals.append(frozenset(strips.atom_id(a) for a in atoms))
    real_atoms = [_parse_fluent(part) for part in real_lines[0].split(",") if part.strip()]
    real_goal = frozenset(strips.atom_id(a) for a in real_atoms)
    if real_goal not in goals:
        raise ValueError(f"real hypothesis not present in hyps.dat in {directory}")

    observations = []
    for line in obs_lines:
        key = parse_action_key(line)
        if key not in strips.action_index:
            raise ValueError(f"observation {key!r} names no grounded action in {directory}")
        observations.append(key)

    return RecognitionProblem(
        domain=strips,
        start=None,
        goals=goals,
        true_goal=goals.index(real_goal),
        observations=observations,
        truncation=100,
        path_id=path_id,
        map_id=directory.name,
    )


def ingest_external(path) -> list[RecognitionProblem]:
    """Load recognition problems from an external task-domain dataset layout.

    ``path`` is either one instance directory or a directory of instance
    directories; each instance holds domain.pddl, template.pddl (or
    problem.pddl, optionally with a <HYPOTHESIS> goal placeholder), hyps.dat
    (one comma-separated goal fluent-set per line), obs.dat (one grounded
    action per line), and real_hyp.dat.
    """
    root = FilePath(path)
    if (root / "domain.pddl").exists():
        directories = [root]
    else:
        directories = sorted(
            d for d in root.iterdir() if d.is_dir() and (d / "domain.pddl").exists()
        )
    if not directories:
        raise FileNotFoundError(f"no dataset instances found under {root}")
    return [_ingest_instance(d, i) for i, d in enumerate(directories)]


# ---------------------------------------------------------------------------
# JSON-lines dataset serialization
# ---------------------------------------------------------------------------

def _fluent_str(problem: StripsProblem, fluent_id: int) -> str:
    return "(" + " ".join(problem.fluents[fluent_id]) + ")"


def problem_to_record(p: RecognitionProblem) -> dict:
    if isinstance(p.domain, GridMap):
        goals = [list(g) for g in p.goals]
        observations = [list(c) for c in p.observations]
        start = list(p.start) if p.start is not None else None
    else:
        goals = [sorted(_fluent_str(p.domain, f) for f in g) for g in p.goals]
        observations = list(p.observations)
        start = None
    return {
        "map_id": p.map_id,
        "start": start,
        "goals": goals,
        "true_goal": p.true_goal,
        "observations": observations,
        "truncation": p.truncation,
        "path_id": p.path_id,
    }


def record_to_problem(record: dict, domain) -> RecognitionProblem:
    if isinstance(domain, GridMap):
        goals = [tuple(g) for g in record["goals"]]
        observations = [tuple(c) for c in record["observations"]]
        start = tuple(record["start"]) if record["start"] is not None else None
    else:
        goals = [
            frozenset(domain.atom_id(_parse_fluent(text)) for text in g)
            for g in record["goals"]
        ]
        observations = list(record["observations"])
        start = None
    return RecognitionProblem(
        domain=domain,
        start=start,
        goals=goals,
        true_goal=record["true_goal"],
        observations=observations,
        truncation=record["truncation"],
        path_id=record.get("path_id", 0),
        map_id=record["map_id"],
    )


def write_problems_jsonl(problems: Iterable[RecognitionProblem], path) -> None:
    with open(path, "w") as fp:
        for p in problems:
            fp.write(json.dumps(problem_to_record(p), sort_keys=True) + "\n")


def read_problems_jsonl(path, domains: dict) -> list[RecognitionProblem]:
    """Rebuild problems from JSONL; ``domains`` maps map_id to its domain object."""
    problems = []
    with open(path) as fp:
        for line in fp:
            if not line.strip():
                continue
            record = json.loads(line)
            try:
                domain = domains[record["map_id"]]
            except KeyError:
                raise KeyError(f"no domain provided for map_id {record['map_id']!r}") from None
            problems.append(record_to_problem(record, domain))
    return problems
