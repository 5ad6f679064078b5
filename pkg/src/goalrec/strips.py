"""Grounded STRIPS planning over a PDDL subset.

Supports typed objects, positive conjunctive preconditions, and add/delete
effects; everything is grounded eagerly at parse time. The planner is A* over
frozenset states with the admissible h_max heuristic, so plan costs are
optimal (minimum action count). Instances are expected to stay desk-scale.
"""

from __future__ import annotations

import heapq
import itertools
import re
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

Atom = tuple[str, ...]


class PddlParseError(ValueError):
    """Malformed or out-of-subset PDDL text."""


class UnsolvableError(Exception):
    """No plan reaches the goal (under the compliance constraint, if any)."""


class PlannerTimeout(Exception):
    """The planner exceeded its deadline."""


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]

    @property
    def key(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True)
class StripsProblem:
    name: str
    fluents: tuple[Atom, ...]
    fluent_index: dict[Atom, int]
    actions: tuple[GroundAction, ...]
    action_index: dict[str, int]
    init: frozenset[int]
    goal: frozenset[int]
    objects: dict[str, str]  # object name -> type
    schema_arity: dict[str, int] = field(default_factory=dict)

    def with_goal(self, goal: frozenset[int]) -> "StripsProblem":
        return replace(self, goal=goal)

    def atom_id(self, atom: Atom) -> int:
        try:
            return self.fluent_index[atom]
        except KeyError:
            raise PddlParseError(f"fluent {atom} does not occur in the grounded problem") from None

    def apply(self, state: frozenset[int], action: GroundAction) -> frozenset[int]:
        return (state - action.delete) | action.add


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_UNSUPPORTED = {
    "or", "not", "forall", "exists", "when", "imply", "=",
    "increase", "decrease", "assign", ">=", "<=", ">", "<",
}
_SUPPORTED_REQUIREMENTS = {":strips", ":typing"}


def _tokenize(text: str) -> list:
    """Parse s-expressions into nested lists of lowercase tokens."""
    text = re.sub(r";[^\n]*", " ", text).lower()
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise PddlParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while pos < len(tokens) and tokens[pos] != ")":
                out.append(read())
            if pos >= len(tokens):
                raise PddlParseError("unbalanced parentheses")
            pos += 1
            return out
        if tok == ")":
            raise PddlParseError("unbalanced parentheses")
        return tok

    expr = read()
    if pos != len(tokens):
        raise PddlParseError("trailing tokens after the top-level expression")
    return expr


def _parse_typed_list(items: Sequence, what: str) -> list[tuple[str, str]]:
    """Parse 'a b - t c - u d' into [(a,t),(b,t),(c,u),(d,object)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        tok = items[i]
        if not isinstance(tok, str):
            raise PddlParseError(f"nested expression in {what} list")
        if tok == "-":
            if i + 1 >= len(items) or not isinstance(items[i + 1], str):
                raise PddlParseError(f"dangling '-' in {what} list")
            for name in pending:
                out.append((name, items[i + 1]))
            pending = []
            i += 2
        else:
            pending.append(tok)
            i += 1
    out.extend((name, "object") for name in pending)
    return out


def _require_atom(expr, where: str) -> tuple[str, list[str]]:
    if not isinstance(expr, list) or not expr or not isinstance(expr[0], str):
        raise PddlParseError(f"expected an atom in {where}")
    head = expr[0]
    if head in _UNSUPPORTED:
        raise PddlParseError(f"unsupported construct '{head}' in {where}")
    for arg in expr[1:]:
        if not isinstance(arg, str):
            raise PddlParseError(f"nested term inside atom in {where}")
    return head, list(expr[1:])


def _conjunction(expr, where: str) -> list:
    """Flatten (and a b ...) / single atom into a list of atom expressions."""
    if not isinstance(expr, list) or not expr:
        raise PddlParseError(f"expected a formula in {where}")
    if expr[0] == "and":
        return list(expr[1:])
    return [expr]


@dataclass
class _Schema:
    name: str
    params: list[tuple[str, str]]
    pre: list[tuple[str, list[str]]]
    add: list[tuple[str, list[str]]]
    delete: list[tuple[str, list[str]]]


def _parse_domain(text: str):
    expr = _tokenize(text)
    if not expr or expr[0] != "define":
        raise PddlParseError("domain file must start with (define ...)")
    name = None
    types: dict[str, str] = {"object": ""}
    predicates: dict[str, int] = {}
    constants: list[tuple[str, str]] = []
    schemas: list[_Schema] = []
    for section in expr[1:]:
        if not isinstance(section, list) or not section:
            raise PddlParseError("malformed domain section")
        head = section[0]
        if head == "domain":
            name = section[1]
        elif head == ":requirements":
            for req in section[1:]:
                if req not in _SUPPORTED_REQUIREMENTS:
                    raise PddlParseError(f"unsupported construct '{req}'")
        elif head == ":types":
            for type_name, parent in _parse_typed_list(section[1:], ":types"):
                types[type_name] = parent
                types.setdefault(parent, "object" if parent != "object" else "")
        elif head == ":constants":
            constants.extend(_parse_typed_list(section[1:], ":constants"))
        elif head == ":predicates":
            for pred in section[1:]:
                pred_name, args = _require_atom(pred, ":predicates")
                predicates[pred_name] = len(_parse_typed_list(args, "predicate parameters"))
        elif head == ":action":
            schemas.append(_parse_action(section))
        elif head == ":functions":
            raise PddlParseError("unsupported construct ':functions'")
        else:
            raise PddlParseError(f"unsupported construct '{head}'")
    if name is None:
        raise PddlParseError("domain has no name")
    if not schemas:
        raise PddlParseError("domain declares no actions")
    return name, types, predicates, constants, schemas


def _parse_action(section) -> _Schema:
    name = None
    params: list[tuple[str, str]] = []
    pre: list[tuple[str, list[str]]] = []
    add: list[tuple[str, list[str]]] = []
    delete: list[tuple[str, list[str]]] = []
    if len(section) < 2 or not isinstance(section[1], str):
        raise PddlParseError("action without a name")
    name = section[1]
    i = 2
    while i < len(section):
        key = section[i]
        if key == ":parameters":
            params = _parse_typed_list(section[i + 1], f"parameters of {name}")
        elif key == ":precondition":
            for atom in _conjunction(section[i + 1], f"precondition of {name}"):
                pre.append(_require_atom(atom, f"precondition of {name}"))
        elif key == ":effect":
            for lit in _conjunction(section[i + 1], f"effect of {name}"):
                if isinstance(lit, list) and lit and lit[0] == "not":
                    if len(lit) != 2:
                        raise PddlParseError(f"malformed (not ...) in effect of {name}")
                    delete.append(_require_atom(lit[1], f"effect of {name}"))
                else:
                    add.append(_require_atom(lit, f"effect of {name}"))
        else:
            raise PddlParseError(f"unsupported construct '{key}' in action {name}")
        i += 2
    return _Schema(name, params, pre, add, delete)


def _parse_problem(text: str):
    expr = _tokenize(text)
    if not expr or expr[0] != "define":
        raise PddlParseError("problem file must start with (define ...)")
    name = None
    domain_name = None
    objects: list[tuple[str, str]] = []
    init: list[tuple[str, list[str]]] = []
    goal: list[tuple[str, list[str]]] | None = None
    for section in expr[1:]:
        if not isinstance(section, list) or not section:
            raise PddlParseError("malformed problem section")
        head = section[0]
        if head == "problem":
            name = section[1]
        elif head == ":domain":
            domain_name = section[1]
        elif head == ":objects":
            objects = _parse_typed_list(section[1:], ":objects")
        elif head == ":init":
            init = [_require_atom(a, ":init") for a in section[1:]]
        elif head == ":goal":
            if len(section) != 2:
                raise PddlParseError("malformed :goal section")
            goal = [_require_atom(a, ":goal") for a in _conjunction(section[1], ":goal")]
        else:
            raise PddlParseError(f"unsupported construct '{head}'")
    if goal is None or not goal:
        raise PddlParseError("problem has an empty or missing goal")
    return name or "problem", domain_name, objects, init, goal


def _type_ancestors(types: dict[str, str], t: str) -> set[str]:
    seen = {t}
    while t in types and types[t]:
        t = types[t]
        if t in seen:
            break
        seen.add(t)
    seen.add("object")
    return seen


def parse_pddl(domain_text: str, problem_text: str) -> StripsProblem:
    """Parse and fully ground a PDDL-subset domain/problem pair.

    Grounding enumerates every type-consistent argument tuple per action
    schema; instantiations whose add and delete lists overlap are dropped so
    each ground action has disjoint effect lists.
    """
    dom_name, types, predicates, constants, schemas = _parse_domain(domain_text)
    prob_name, prob_domain, obj_list, init_atoms, goal_atoms = _parse_problem(problem_text)
    if prob_domain is not None and prob_domain != dom_name:
        raise PddlParseError(f"problem references domain '{prob_domain}', not '{dom_name}'")

    objects: dict[str, str] = {}
    for obj, obj_type in constants + obj_list:
        if obj_type not in types:
            raise PddlParseError(f"object '{obj}' has undefined type '{obj_type}'")
        objects[obj] = obj_type

    def check_atom(pred: str, args: list[str], where: str, allow_vars: bool = False) -> None:
        if pred not in predicates:
            raise PddlParseError(f"undefined predicate '{pred}' in {where}")
        if len(args) != predicates[pred]:
            raise PddlParseError(
                f"arity mismatch for '{pred}' in {where}: got {len(args)}, "
                f"expected {predicates[pred]}"
            )
        for arg in args:
            if arg.startswith("?"):
                if not allow_vars:
                    raise PddlParseError(f"unbound variable '{arg}' in {where}")
            elif arg not in objects:
                raise PddlParseError(f"undefined object '{arg}' in {where}")

    fluents: list[Atom] = []
    fluent_index: dict[Atom, int] = {}

    def atom_id(atom: Atom) -> int:
        if atom not in fluent_index:
            fluent_index[atom] = len(fluents)
            fluents.append(atom)
        return fluent_index[atom]

    for pred, args in init_atoms:
        check_atom(pred, args, ":init")
        atom_id((pred, *args))
    for pred, args in goal_atoms:
        check_atom(pred, args, ":goal")
        atom_id((pred, *args))

    actions: list[GroundAction] = []
    action_index: dict[str, int] = {}
    schema_arity: dict[str, int] = {}
    for schema in schemas:
        schema_arity[schema.name] = len(schema.params)
        for pred, args in schema.pre + schema.add + schema.delete:
            if pred not in predicates:
                raise PddlParseError(f"undefined predicate '{pred}' in action {schema.name}")
            if len(args) != predicates[pred]:
                raise PddlParseError(
                    f"arity mismatch for '{pred}' in action {schema.name}"
                )
            param_names = {p for p, _ in schema.params}
            for arg in args:
                if arg.startswith("?") and arg not in param_names:
                    raise PddlParseError(
                        f"unbound variable '{arg}' in action {schema.name}"
                    )
                if not arg.startswith("?") and arg not in objects:
                    raise PddlParseError(
                        f"undefined object '{arg}' in action {schema.name}"
                    )
        candidates = []
        for _, param_type in schema.params:
            if param_type not in types:
                raise PddlParseError(
                    f"parameter of action {schema.name} has undefined type '{param_type}'"
                )
            matching = [o for o, t in objects.items() if param_type in _type_ancestors(types, t)]
            candidates.append(matching)
        for binding in itertools.product(*candidates):
            env = {p: b for (p, _), b in zip(schema.params, binding)}

            def ground(lits) -> frozenset[int]:
                out = set()
                for pred, args in lits:
                    atom = (pred, *(env.get(a, a) for a in args))
                    out.add(atom_id(atom))
                return frozenset(out)

            pre, add, delete = ground(schema.pre), ground(schema.add), ground(schema.delete)
            if add & delete:
                continue  # degenerate instantiation, keeps effect lists disjoint
            action = GroundAction(schema.name, tuple(binding), pre, add, delete)
            if action.key in action_index:
                continue
            action_index[action.key] = len(actions)
            actions.append(action)

    return StripsProblem(
        name=f"{dom_name}/{prob_name}",
        fluents=tuple(fluents),
        fluent_index=fluent_index,
        actions=tuple(actions),
        action_index=action_index,
        init=frozenset(fluent_index[(p, *a)] for p, a in init_atoms),
        goal=frozenset(fluent_index[(p, *a)] for p, a in goal_atoms),
        objects=objects,
        schema_arity=schema_arity,
    )


def parse_action_key(line: str) -> str:
    """Normalize one '(name arg1 arg2)' observation line to an action key."""
    body = line.strip().lower()
    match = re.fullmatch(r"\(\s*([^\s()]+)((?:\s+[^\s()]+)*)\s*\)", body)
    if not match:
        raise PddlParseError(f"malformed action line {line!r}")
    parts = [match.group(1)] + match.group(2).split()
    return "(" + " ".join(parts) + ")"


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------

def hmax(problem: StripsProblem, state: frozenset[int]) -> float:
    """h_max: admissible estimate of the cost from ``state`` to the goal."""
    cost = [np.inf] * len(problem.fluents)
    for f in state:
        cost[f] = 0.0
    changed = True
    while changed:
        changed = False
        for action in problem.actions:
            worst = 0.0
            for p in action.pre:
                cp = cost[p]
                if cp == np.inf:
                    worst = np.inf
                    break
                if cp > worst:
                    worst = cp
            if worst == np.inf:
                continue
            through = worst + 1.0
            for q in action.add:
                if through < cost[q]:
                    cost[q] = through
                    changed = True
    out = 0.0
    for f in problem.goal:
        cf = cost[f]
        if cf == np.inf:
            return np.inf
        if cf > out:
            out = cf
    return out


class _Deadline:
    def __init__(self, seconds: float | None):
        self.until = None if seconds is None else time.monotonic() + seconds
        self.ticks = 0

    def check(self) -> None:
        if self.until is None:
            return
        self.ticks += 1
        if self.ticks % 64 == 1 and time.monotonic() > self.until:
            raise PlannerTimeout("planner exceeded its deadline")


def plan(
    problem: StripsProblem,
    deadline_s: float | None = None,
    tie_seed: int | None = None,
) -> list[GroundAction]:
    """Optimal plan via A* with h_max; raises UnsolvableError when none exists.

    ``tie_seed`` randomizes tie-breaking among equally promising nodes, which
    varies the returned plan without giving up optimality.
    """
    rng = None if tie_seed is None else np.random.default_rng(tie_seed)
    deadline = _Deadline(deadline_s)
    h_cache: dict[frozenset[int], float] = {}

    def h(state: frozenset[int]) -> float:
        if state not in h_cache:
            h_cache[state] = hmax(problem, state)
        return h_cache[state]

    start = problem.init
    if problem.goal <= start:
        return []
    h0 = h(start)
    if h0 == np.inf:
        raise UnsolvableError("goal unreachable under h_max relaxation")
    counter = itertools.count()
    g_cost = {start: 0}
    parent: dict[frozenset[int], tuple[frozenset[int], GroundAction]] = {}
    tie = rng.random() if rng is not None else 0.0
    heap = [(h0, 0, tie, next(counter), start)]
    closed: set[frozenset[int]] = set()
    while heap:
        deadline.check()
        _, _, _, _, state = heapq.heappop(heap)
        if state in closed:
            continue
        closed.add(state)
        if problem.goal <= state:
            steps: list[GroundAction] = []
            node = state
            while node in parent:
                node, action = parent[node]
                steps.append(action)
            steps.reverse()
            return steps
        new_g = g_cost[state] + 1
        for action in problem.actions:
            if not action.pre <= state:
                continue
            nxt = problem.apply(state, action)
            if nxt in closed:
                continue
            if new_g < g_cost.get(nxt, np.inf):
                hn = h(nxt)
                if hn == np.inf:
                    continue
                g_cost[nxt] = new_g
                parent[nxt] = (state, action)
                tie = rng.random() if rng is not None else 0.0
                heapq.heappush(heap, (new_g + hn, -new_g, tie, next(counter), nxt))
    raise UnsolvableError("no plan reaches the goal")


def plan_cost(problem: StripsProblem, deadline_s: float | None = None) -> int:
    """Optimal (minimum action count) plan cost."""
    return len(plan(problem, deadline_s=deadline_s))


def _compliance_plan_costs(
    problem: StripsProblem,
    obs: Sequence[str],
    deadline_s: float | None = None,
) -> tuple[float, float]:
    """Min plan costs that do / do not embed ``obs`` (action keys) in order.

    A* over (state, matched-prefix-length) with forced advancement: applying
    the next unmatched observed action always advances the match index. The
    heuristic is plain h_max of the state part, which is consistent for both
    terminal conditions, so the first pop of each terminal kind is optimal.
    Either cost may be np.inf.
    """
    obs_actions: list[GroundAction] = []
    for key in obs:
        if key not in problem.action_index:
            raise ValueError(f"observation {key!r} names no grounded action")
        obs_actions.append(problem.actions[problem.action_index[key]])
    n_obs = len(obs_actions)

    deadline = _Deadline(deadline_s)
    h_cache: dict[frozenset[int], float] = {}

    def h_state(state: frozenset[int]) -> float:
        if state not in h_cache:
            h_cache[state] = hmax(problem, state)
        return h_cache[state]

    start = (problem.init, 0)
    counter = itertools.count()
    g_cost = {start: 0}
    heap = [(h_state(problem.init), 0, next(counter), start)]
    closed: set[tuple[frozenset[int], int]] = set()
    compliant = np.inf
    noncompliant = np.inf
    while heap:
        deadline.check()
        _, _, _, node = heapq.heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        state, k = node
        cost_here = g_cost[node]
        if problem.goal <= state:
            if k == n_obs:
                compliant = min(compliant, float(cost_here))
            else:
                noncompliant = min(noncompliant, float(cost_here))
            if np.isfinite(compliant) and np.isfinite(noncompliant):
                break
        new_g = cost_here + 1
        for action in problem.actions:
            if not action.pre <= state:
                continue
            nxt_state = problem.apply(state, action)
            nk = k + 1 if k < n_obs and action is obs_actions[k] else k
            nxt = (nxt_state, nk)
            if nxt in closed:
                continue
            if new_g < g_cost.get(nxt, np.inf):
                hv = h_state(nxt_state)
                if hv == np.inf:
                    continue
                g_cost[nxt] = new_g
                heapq.heappush(heap, (new_g + hv, -new_g, next(counter), nxt))
    return compliant, noncompliant


def compliant_plan_cost(
    problem: StripsProblem, obs: Sequence[str], deadline_s: float | None = None
) -> int:
    """Min cost over plans embedding ``obs`` as a subsequence.

    An empty observation sequence embeds vacuously, reducing to plan_cost.
    Raises UnsolvableError when no compliant plan exists.
    """
    if len(obs) == 0:
        return plan_cost(problem, deadline_s=deadline_s)
    cost, _ = _compliance_plan_costs(problem, obs, deadline_s)
    if not np.isfinite(cost):
        raise UnsolvableError("no plan embeds the observed actions")
    return int(cost)


def noncompliant_plan_cost(
    problem: StripsProblem, obs: Sequence[str], deadline_s: float | None = None
) -> float:
    """Min cost over plans NOT embedding ``obs``; np.inf when impossible.

    An empty sequence embeds in every plan, so the result is np.inf.
    """
    if len(obs) == 0:
        return np.inf
    _, cost = _compliance_plan_costs(problem, obs, deadline_s)
    return cost
