"""Built-in desk-scale task domains for the benchmark harness.

Real task benchmarks arrive through :func:`goalrec.data.ingest_external`;
these generators produce reduced instances small enough for the optimal
planner while keeping the same action vocabulary shape.
"""

from __future__ import annotations

from .strips import StripsProblem, parse_pddl

BLOCKS_DOMAIN = """
(define (domain blocks)
  (:requirements :strips :typing)
  (:types block)
  (:predicates (on ?x - block ?y - block) (ontable ?x - block)
               (clear ?x - block) (handempty) (holding ?x - block))
  (:action pick-up
    :parameters (?x - block)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (not (ontable ?x)) (not (clear ?x)) (not (handempty)) (holding ?x)))
  (:action put-down
    :parameters (?x - block)
    :precondition (holding ?x)
    :effect (and (not (holding ?x)) (clear ?x) (handempty) (ontable ?x)))
  (:action stack
    :parameters (?x - block ?y - block)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (not (holding ?x)) (not (clear ?y)) (clear ?x) (handempty) (on ?x ?y)))
  (:action unstack
    :parameters (?x - block ?y - block)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (clear ?x)) (not (handempty)) (not (on ?x ?y)))))
"""

LOGISTICS_DOMAIN = """
(define (domain logistics)
  (:requirements :strips :typing)
  (:types package vehicle - thing
          truck airplane - vehicle
          airport site - place
          thing place city)
  (:predicates (at ?t - thing ?p - place) (in ?p - package ?v - vehicle)
               (in-city ?p - place ?c - city))
  (:action load-truck
    :parameters (?p - package ?t - truck ?l - place)
    :precondition (and (at ?p ?l) (at ?t ?l))
    :effect (and (not (at ?p ?l)) (in ?p ?t)))
  (:action unload-truck
    :parameters (?p - package ?t - truck ?l - place)
    :precondition (and (in ?p ?t) (at ?t ?l))
    :effect (and (not (in ?p ?t)) (at ?p ?l)))
  (:action load-airplane
    :parameters (?p - package ?a - airplane ?l - airport)
    :precondition (and (at ?p ?l) (at ?a ?l))
    :effect (and (not (at ?p ?l)) (in ?p ?a)))
  (:action unload-airplane
    :parameters (?p - package ?a - airplane ?l - airport)
    :precondition (and (in ?p ?a) (at ?a ?l))
    :effect (and (not (in ?p ?a)) (at ?p ?l)))
  (:action drive-truck
    :parameters (?t - truck ?from - place ?to - place ?c - city)
    :precondition (and (at ?t ?from) (in-city ?from ?c) (in-city ?to ?c))
    :effect (and (not (at ?t ?from)) (at ?t ?to)))
  (:action fly-airplane
    :parameters (?a - airplane ?from - airport ?to - airport)
    :precondition (at ?a ?from)
    :effect (and (not (at ?a ?from)) (at ?a ?to))))
"""


def micro_blocks(words: tuple[str, ...] = ("abc", "bca", "cab")):
    """Reduced word-spelling blocks instance.

    Each candidate word is a tower, first letter on top; all blocks start on
    the table. Returns (problem, goal fluent-sets) with the problem's own
    goal set to the first word.
    """
    letters = sorted({ch for word in words for ch in word})
    if any(len(word) < 2 for word in words):
        raise ValueError("words need at least two letters to form a tower")
    init = (
        " ".join(f"(ontable {b})" for b in letters)
        + " "
        + " ".join(f"(clear {b})" for b in letters)
        + " (handempty)"
    )
    first_goal = " ".join(f"(on {a} {b})" for a, b in zip(words[0], words[0][1:]))
    problem_text = f"""
(define (problem spell)
  (:domain blocks)
  (:objects {' '.join(letters)} - block)
  (:init {init})
  (:goal (and {first_goal})))
"""
    problem = parse_pddl(BLOCKS_DOMAIN, problem_text)
    goal_sets = [
        frozenset(problem.atom_id(("on", a, b)) for a, b in zip(word, word[1:]))
        for word in words
    ]
    return problem, goal_sets


def micro_logistics():
    """Two cities with an airport and a site each, one truck per city, one
    airplane, two packages. Goals are package destinations.
    """
    problem_text = """
(define (problem deliver)
  (:domain logistics)
  (:objects p1 p2 - package
            t1 t2 - truck
            plane - airplane
            a1 a2 - airport
            s1 s2 - site
            c1 c2 - city)
  (:init (at t1 s1) (at t2 s2) (at plane a1) (at p1 s1) (at p2 s2)
         (in-city a1 c1) (in-city s1 c1) (in-city a2 c2) (in-city s2 c2))
  (:goal (and (at p1 s2))))
"""
    problem = parse_pddl(LOGISTICS_DOMAIN, problem_text)
    goal_sets = [
        frozenset({problem.atom_id(("at", "p1", "s2"))}),
        frozenset({problem.atom_id(("at", "p1", "a2"))}),
        frozenset({problem.atom_id(("at", "p2", "s1"))}),
        frozenset({problem.atom_id(("at", "p2", "a1"))}),
    ]
    return problem, goal_sets


BUILTIN_TASKS = {
    "blocks": micro_blocks,
    "logistics": micro_logistics,
}


def builtin_task(name: str) -> tuple[StripsProblem, list[frozenset[int]]]:
    try:
        factory = BUILTIN_TASKS[name]
    except KeyError:
        raise ValueError(
            f"unknown task domain {name!r}; choose from {sorted(BUILTIN_TASKS)}"
        ) from None
    return factory()
