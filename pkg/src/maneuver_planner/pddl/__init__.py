"""Parsing, printing and grounding for a numeric PDDL subset."""

from .grounding import (
    GroundAction,
    GroundTask,
    Plan,
    State,
    ValidationResult,
    applicable,
    apply,
    apply_relaxed,
    ground,
    parse_plan,
    validate_plan,
)
from .model import (
    ActionSchema,
    Atom,
    Domain,
    FluentTerm,
    Forall,
    FunctionSchema,
    Increase,
    Literal,
    PredicateSchema,
    Problem,
    TypedName,
)
from .parser import parse_domain, parse_problem
from .printer import domain_to_pddl, problem_to_pddl

__all__ = [
    "ActionSchema", "Atom", "Domain", "FluentTerm", "Forall", "FunctionSchema", "GroundAction",
    "GroundTask", "Increase", "Literal", "Plan", "PredicateSchema", "Problem", "State", "TypedName",
    "ValidationResult", "applicable", "apply", "apply_relaxed", "domain_to_pddl", "ground",
    "parse_domain", "parse_plan", "parse_problem", "problem_to_pddl", "validate_plan",
]
