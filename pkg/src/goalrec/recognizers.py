"""Cost-difference goal recognition.

The likelihood of a goal is a sigmoid in the difference between the optimal
cost that complies with the observations and the optimal cost that defies
them; a Bayes step turns per-goal likelihoods into a posterior. Two
recognizers expose this as sklearn-style estimators:

* :class:`PlanCostRecognizer` solves both constrained planning problems per
  goal on demand (method id ``rg``; works on grids and STRIPS tasks).
* :class:`CostMapRecognizer` precomputes one cost field per goal at fit time
  and scores the last seen position with two lookups (method id ``ms``;
  navigation only).
"""

from __future__ import annotations

import math
import time
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import RecognitionProblem
from .grid import Cell, GridMap
from .search import CostField, _compliance_costs, cost_field
from .strips import PlannerTimeout, StripsProblem, _compliance_plan_costs


class AllZeroEvidenceError(Exception):
    """Every candidate goal has zero likelihood; the posterior is undefined."""


def likelihood(delta: float, beta: float = 1.0) -> float:
    """Sigmoid likelihood exp(-beta*delta) / (1 + exp(-beta*delta)).

    Strictly decreasing in delta; the infinities take the continuous limits
    (+inf -> 0, -inf -> 1).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if delta == np.inf:
        return 0.0
    if delta == -np.inf:
        return 1.0
    x = beta * delta
    if x >= 0:
        z = math.exp(-x)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(x))


def posterior(likelihoods: Sequence[float], prior: Sequence[float] | None = None) -> np.ndarray:
    """Normalized per-goal posterior from likelihoods and an optional prior.

    Raises :class:`AllZeroEvidenceError` when the normalizer vanishes; the
    recognizers map that case to the uniform distribution so the accuracy
    metric always has a defined prediction.
    """
    liks = np.asarray(likelihoods, dtype=float)
    if prior is None:
        weights = liks
    else:
        pri = np.asarray(prior, dtype=float)
        if pri.shape != liks.shape:
            raise ValueError("prior length must match likelihood count")
        if np.any(pri < 0) or abs(pri.sum() - 1.0) > 1e-9:
            raise ValueError("prior must be nonnegative and sum to 1")
        weights = liks * pri
    total = weights.sum()
    if total == 0.0:
        raise AllZeroEvidenceError("all candidate goals have zero likelihood")
    return weights / total


def compliance_delta(grid: GridMap, start: Cell, goal: Cell, obs: Sequence[Cell]) -> float:
    """Compliant minus non-compliant optimal cost on a grid; +/-inf at the limits."""
    compliant, noncompliant = _compliance_costs(grid, start, goal, obs)
    if not np.isfinite(compliant):
        return np.inf
    if not np.isfinite(noncompliant):
        return -np.inf
    return compliant - noncompliant


def compliance_delta_strips(
    problem: StripsProblem, obs: Sequence[str], deadline_s: float | None = None
) -> float:
    """Compliant minus non-compliant optimal plan cost for a STRIPS problem."""
    compliant, noncompliant = _compliance_plan_costs(problem, obs, deadline_s)
    if not np.isfinite(compliant):
        return np.inf
    if not np.isfinite(noncompliant):
        return -np.inf
    return compliant - noncompliant


def cost_map_delta(field: CostField, start: Cell, last: Cell) -> float:
    """Cost-to-goal at the last seen position minus at the start.

    An unreachable last position dominates (delta +inf, likelihood 0) even
    when the start is unreachable too; an unreachable start alone means every
    path made progress (delta -inf, likelihood 1).
    """
    remaining = field.cost(last)
    if not np.isfinite(remaining):
        return np.inf
    from_start = field.cost(start)
    if not np.isfinite(from_start):
        return -np.inf
    return remaining - from_start


def _posterior_from_deltas(deltas: Sequence[float], beta: float, prior) -> np.ndarray:
    liks = [likelihood(d, beta) for d in deltas]
    try:
        return posterior(liks, prior)
    except AllZeroEvidenceError:
        return np.full(len(liks), 1.0 / len(liks))


def _tie_broken_argmax(probs: np.ndarray, rng: np.random.Generator) -> int:
    best = probs.max()
    tied = np.flatnonzero(probs == best)
    if len(tied) == 1:
        return int(tied[0])
    return int(rng.choice(tied))


class PlanCostRecognizer(BaseEstimator):
    """Goal recognizer from observation-compliant vs non-compliant plan costs.

    Stateless: fit() only marks the estimator ready. predict_proba solves two
    constrained shortest-path problems per candidate goal, on grids or STRIPS
    tasks. ``timeout_s`` bounds the time spent per problem; a timed-out
    problem yields a NaN row, which the harness reports as a timeout.
    """

    def __init__(self, beta: float = 1.0, prior=None, timeout_s: float | None = None,
                 random_state: int = 0):
        self.beta = beta
        self.prior = prior
        self.timeout_s = timeout_s
        self.random_state = random_state

    def fit(self, problems=None, y=None):
        self.fitted_ = True
        return self

    def _deltas(self, problem: RecognitionProblem, started: float) -> list[float]:
        deltas = []
        for goal in problem.goals:
            remaining = None
            if self.timeout_s is not None:
                remaining = self.timeout_s - (time.monotonic() - started)
                if remaining <= 0:
                    raise PlannerTimeout("per-problem timeout exceeded")
            if isinstance(problem.domain, GridMap):
                # Grid searches are bounded by the product-space size, so the
                # clock is only consulted between goals here.
                deltas.append(
                    compliance_delta(problem.domain, problem.start, goal, problem.observations)
                )
            else:
                deltas.append(
                    compliance_delta_strips(
                        problem.domain.with_goal(goal), problem.observations, remaining
                    )
                )
        return deltas

    def predict_proba(self, problems: Sequence[RecognitionProblem]) -> np.ndarray:
        if not problems:
            raise ValueError("no problems to predict")
        n_goals = len(problems[0].goals)
        out = np.empty((len(problems), n_goals))
        for i, problem in enumerate(problems):
            if len(problem.goals) != n_goals:
                raise ValueError("all problems must share one goal-set size")
            started = time.monotonic()
            try:
                deltas = self._deltas(problem, started)
            except PlannerTimeout:
                out[i] = np.nan
                continue
            out[i] = _posterior_from_deltas(deltas, self.beta, self.prior)
        return out

    def predict(self, problems: Sequence[RecognitionProblem]) -> np.ndarray:
        rng = np.random.default_rng(self.random_state)
        probs = self.predict_proba(problems)
        return np.array([_tie_broken_argmax(row, rng) for row in probs])


class CostMapRecognizer(BaseEstimator):
    """Navigation recognizer over precomputed cost-to-goal fields.

    fit() runs one all-cells shortest-path sweep per goal (the offline
    stage); each prediction is then two table lookups per goal using only
    the last observed position.
    """

    def __init__(self, beta: float = 1.0, prior=None, random_state: int = 0):
        self.beta = beta
        self.prior = prior
        self.random_state = random_state

    def fit(self, problems: Sequence[RecognitionProblem], y=None):
        if not problems:
            raise ValueError("cannot fit on an empty problem list")
        first = problems[0]
        if not isinstance(first.domain, GridMap):
            raise ValueError("cost-map recognition only applies to navigation domains")
        for p in problems:
            if p.domain is not first.domain or p.goals != first.goals:
                raise ValueError("all problems must share one map and goal set")
        self.grid_ = first.domain
        self.goals_ = list(first.goals)
        self.fields_ = [cost_field(self.grid_, g) for g in self.goals_]
        return self

    def fit_map(self, grid: GridMap, goals: Sequence[Cell]):
        """Fit directly from a map and goal set, without problem objects."""
        self.grid_ = grid
        self.goals_ = list(goals)
        self.fields_ = [cost_field(grid, g) for g in goals]
        return self

    def _check_fitted(self):
        if not hasattr(self, "fields_"):
            raise NotFittedError("call fit() or fit_map() before predicting")

    def predict_proba(self, problems: Sequence[RecognitionProblem]) -> np.ndarray:
        self._check_fitted()
        if not problems:
            raise ValueError("no problems to predict")
        out = np.empty((len(problems), len(self.goals_)))
        for i, problem in enumerate(problems):
            if problem.goals != self.goals_:
                raise ValueError("problem goal set differs from the fitted goal set")
            last = problem.observations[-1]
            deltas = [
                cost_map_delta(field, problem.start, last) for field in self.fields_
            ]
            out[i] = _posterior_from_deltas(deltas, self.beta, self.prior)
        return out

    def predict(self, problems: Sequence[RecognitionProblem]) -> np.ndarray:
        rng = np.random.default_rng(self.random_state)
        probs = self.predict_proba(problems)
        return np.array([_tie_broken_argmax(row, rng) for row in probs])
