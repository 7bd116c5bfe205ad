from importlib import resources

import pytest

from maneuver_planner.errors import PDDLSyntaxError, SemanticError, TypeMismatch, UnsupportedFeature
from maneuver_planner.pddl import (
    FluentTerm, apply, domain_to_pddl, ground, parse_domain, parse_plan, parse_problem,
    problem_to_pddl, validate_plan,
)
from maneuver_planner.pddl.sexpr import parse_sexprs

DOMAIN = (resources.files("maneuver_planner") / "data" / "maneuver_domain.pddl").read_text()

TOY = """
(define (domain toy)
  (:requirements :strips :typing :numeric-fluents)
  (:types block)
  (:predicates (on ?a ?b - block) (clear ?a - block) (held ?a - block))
  (:functions (cost) (weight ?a - block))
  (:action pick :parameters (?a ?b - block)
    :precondition (and (on ?a ?b) (clear ?a))
    :effect (and (held ?a) (clear ?b) (not (on ?a ?b)) (increase (cost) (weight ?a)))))
"""

TOY_PROBLEM = """
(define (problem p1) (:domain toy)
  (:objects a b c - block)
  (:init (on a b) (clear a) (= (cost) 0) (= (weight a) 2.5))
  (:goal (and (held a)))
  (:metric minimize (cost)))
"""


def test_sexpr_positions():
    with pytest.raises(PDDLSyntaxError) as e:
        parse_sexprs("(a (b)\n  (c")
    assert e.value.line == 2
    with pytest.raises(PDDLSyntaxError):
        parse_sexprs("(a))")
    assert parse_sexprs("; comment\n(A b)")[0] == ["a", "b"]


@pytest.mark.parametrize("text,exc", [
    ("(define (domain d) (:requirements :adl))", UnsupportedFeature),
    ("(define (domain d) (:types a - (either b c)))", UnsupportedFeature),
    ("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (q ?x) :effect (p ?x)))",
     SemanticError),
    ("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (p ?x) "
     ":effect (assign (p ?x) 1)))", UnsupportedFeature),
    ("(define domain)", PDDLSyntaxError),
])
def test_domain_errors(text, exc):
    with pytest.raises(exc):
        parse_domain(text)


def test_problem_errors():
    d = parse_domain(TOY)
    with pytest.raises(UnsupportedFeature):
        parse_problem(TOY_PROBLEM.replace("minimize", "maximize"), d)
    with pytest.raises((SemanticError, TypeMismatch)):
        parse_problem(TOY_PROBLEM.replace("(on a b)", "(on a zz)"), d)


def test_roundtrip_toy_and_domain():
    for text in (TOY, DOMAIN):
        d = parse_domain(text)
        assert parse_domain(domain_to_pddl(d)) == d
    d = parse_domain(TOY)
    p = parse_problem(TOY_PROBLEM, d)
    assert parse_problem(problem_to_pddl(p), d) == p


def test_grounding_and_fluent_increments():
    d = parse_domain(TOY)
    p = parse_problem(TOY_PROBLEM, d)
    task = ground(d, p)
    # only block a has a weight, so b and c can never be picked
    assert [str(a) for a in task.actions] == ["(pick a a)", "(pick a b)", "(pick a c)"]
    s = apply(task.init, task.find("pick", "a", "b"))
    assert s.value(FluentTerm("cost")) == 2.5
    assert task.goal_satisfied(s)
    plan = parse_plan(task, "(pick a b)\n")
    assert validate_plan(task, plan).ok
    assert validate_plan(task, plan).cost == 2.5


def test_validate_reports_failing_step():
    d = parse_domain(TOY)
    task = ground(d, parse_problem(TOY_PROBLEM, d), prune_static=False)
    act = task.find("pick", "a", "b")
    res = validate_plan(task, [act, act])
    assert not res.ok and res.failed_step == 2 and "on a b" in res.reason


def test_domain_declares_trajectory_fluents():
    d = parse_domain(DOMAIN)
    assert {a.name for a in d.actions} >= {"keep_speed", "overtake"}
    names = set(d.functions)
    assert {"time_of_traj", "at_x", "at_y", "at_time", "curr_time", "cost"} <= names
