"""Lifted PDDL structures for the supported numeric subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class TypedName:
    name: str
    type: str = "object"


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple = ()

    def __str__(self):
        return "(" + " ".join((self.predicate,) + tuple(self.args)) + ")"

    def substitute(self, binding: dict) -> "Atom":
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True


@dataclass(frozen=True)
class Forall:
    params: tuple  # TypedName
    body: tuple  # Literal | Forall


Condition = Union[Literal, Forall]


@dataclass(frozen=True)
class FluentTerm:
    name: str
    args: tuple = ()

    def __str__(self):
        return "(" + " ".join((self.name,) + tuple(self.args)) + ")"

    def substitute(self, binding: dict) -> "FluentTerm":
        return FluentTerm(self.name, tuple(binding.get(a, a) for a in self.args))


@dataclass(frozen=True)
class Increase:
    target: FluentTerm
    value: Union[float, FluentTerm]


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: tuple = ()


@dataclass(frozen=True)
class FunctionSchema:
    name: str
    params: tuple = ()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple
    precondition: tuple = ()
    add: tuple = ()
    delete: tuple = ()
    numeric: tuple = ()

    @property
    def positive_preconditions(self) -> tuple:
        return tuple(c.atom for c in self.precondition if isinstance(c, Literal) and c.positive)

    @property
    def negative_preconditions(self) -> tuple:
        return tuple(c.atom for c in self.precondition if isinstance(c, Literal) and not c.positive)

    @property
    def quantified_preconditions(self) -> tuple:
        return tuple(c for c in self.precondition if isinstance(c, Forall))


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple = ()
    types: dict = field(default_factory=dict)  # type -> parent
    constants: dict = field(default_factory=dict)  # name -> type
    predicates: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    actions: tuple = ()

    def is_subtype(self, t: str, parent: str) -> bool:
        seen = set()
        while t not in seen:
            if t == parent:
                return True
            seen.add(t)
            t = self.types.get(t, "object")
        return parent == "object"

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: dict = field(default_factory=dict)  # name -> type
    init: tuple = ()  # Atom
    init_fluents: dict = field(default_factory=dict)  # FluentTerm -> float
    goal: tuple = ()  # Condition
    metric: Optional[tuple] = None  # ("minimize", FluentTerm)

    def with_additions(self, objects: dict = None, atoms=(), fluents: dict = None) -> "Problem":
        """Copy with extra objects, initial atoms and fluent values."""
        objs = dict(self.objects)
        objs.update(objects or {})
        seen = set(self.init)
        init = list(self.init)
        for a in atoms:
            if a not in seen:
                seen.add(a)
                init.append(a)
        fl = dict(self.init_fluents)
        fl.update(fluents or {})
        return Problem(self.name, self.domain_name, objs, tuple(init), fl, self.goal, self.metric)
