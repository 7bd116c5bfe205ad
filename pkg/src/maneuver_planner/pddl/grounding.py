"""Grounding and propositional-numeric state semantics.

Atoms are interned as integers. A state is the set of true atom indices plus
the values of the fluents that actions change. Fluents no action changes are
static and folded into the ground actions as constants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from ..errors import NotApplicable, SemanticError, TypeMismatch, UnsupportedFeature
from .model import Atom, Domain, FluentTerm, Literal, Problem


@dataclass(frozen=True)
class State:
    atoms: frozenset
    fluents: tuple = ()  # sorted ((FluentTerm, value), ...)

    def value(self, term: FluentTerm) -> float:
        for k, v in self.fluents:
            if k == term:
                return v
        raise KeyError(term)

    @property
    def fluent_dict(self) -> dict:
        return dict(self.fluents)


@dataclass(frozen=True, eq=False)
class GroundAction:
    name: str
    args: tuple
    pre_pos: frozenset
    pre_neg: frozenset
    add: frozenset
    delete: frozenset
    # (fluent, constant) or (fluent, FluentTerm read from the state)
    increments: tuple = ()
    cost: float = 1.0

    def __str__(self):
        return "(" + " ".join((self.name,) + tuple(self.args)) + ")"

    @property
    def key(self):
        return (self.name, self.args)


@dataclass(frozen=True, eq=False)
class GroundTask:
    atoms: tuple  # index -> Atom
    atom_index: dict
    actions: tuple
    init: State
    goal_pos: frozenset
    goal_neg: frozenset
    metric: Optional[FluentTerm] = None
    static_fluents: dict = field(default_factory=dict)

    def atom_id(self, atom: Atom) -> Optional[int]:
        return self.atom_index.get(atom)

    def decode(self, state: State) -> set:
        return {self.atoms[i] for i in state.atoms}

    def goal_satisfied(self, state: State) -> bool:
        return self.goal_pos <= state.atoms and not (self.goal_neg & state.atoms)

    def find(self, name: str, *args) -> GroundAction:
        for a in self.actions:
            if a.name == name and a.args == tuple(args):
                return a
        raise KeyError((name, args))


def applicable(state: State, action: GroundAction) -> bool:
    return action.pre_pos <= state.atoms and not (action.pre_neg & state.atoms)


def apply(state: State, action: GroundAction, check: bool = True) -> State:
    """Successor state: deletes removed, adds inserted, fluents increased.

    Increments that read fluents use the pre-transition values.
    """
    if check and not applicable(state, action):
        raise NotApplicable(f"{action} is not applicable")
    atoms = (state.atoms - action.delete) | action.add
    if not action.increments:
        return State(atoms, state.fluents)
    vals = dict(state.fluents)
    old = dict(state.fluents)
    for term, inc in action.increments:
        delta = old[inc] if isinstance(inc, FluentTerm) else inc
        vals[term] = vals[term] + delta
    return State(atoms, tuple(sorted(vals.items(), key=_fkey)))


def apply_relaxed(state: State, action: GroundAction) -> State:
    """Delete-ignoring successor (fluents untouched)."""
    return State(state.atoms | action.add, state.fluents)


def _fkey(item):
    return (item[0].name, item[0].args)


# grounding ------------------------------------------------------------------

def _objects_by_type(domain: Domain, objects: dict) -> dict:
    types = set(domain.types) | {"object"}
    by_type = {t: [] for t in types}
    for name in sorted(objects):
        t = objects[name]
        if t != "object" and t not in domain.types:
            raise TypeMismatch(f"object {name} has undeclared type {t}")
        for cand in types:
            if domain.is_subtype(t, cand):
                by_type[cand].append(name)
    return by_type


def _expand(conds, binding, by_type, out_pos, out_neg):
    for c in conds:
        if isinstance(c, Literal):
            (out_pos if c.positive else out_neg).append(c.atom.substitute(binding))
        else:
            names = [p.name for p in c.params]
            pools = [by_type.get(p.type, []) for p in c.params]
            for combo in itertools.product(*pools):
                inner = dict(binding)
                inner.update(zip(names, combo))
                _expand(c.body, inner, by_type, out_pos, out_neg)


def _modified(domain: Domain):
    preds, fluents = set(), set()
    for a in domain.actions:
        preds.update(x.predicate for x in a.add)
        preds.update(x.predicate for x in a.delete)
        fluents.update(inc.target.name for inc in a.numeric)
    return preds, fluents


def ground(domain: Domain, problem: Problem, prune_static: bool = True) -> GroundTask:
    """Instantiate every action over type-consistent object tuples.

    With ``prune_static`` (the default) instantiations whose static
    preconditions fail in the initial state are dropped; enumeration joins
    on static positive preconditions so large object sets stay cheap.
    """
    objects = dict(domain.constants)
    objects.update(problem.objects)
    by_type = _objects_by_type(domain, objects)
    dyn_preds, dyn_fluents = _modified(domain)
    init_atoms = set(problem.init)
    static_facts = {}
    for a in problem.init:
        if a.predicate not in dyn_preds:
            static_facts.setdefault(a.predicate, set()).add(a.args)

    metric = problem.metric[1] if problem.metric else None
    static_fluents = {k: v for k, v in problem.init_fluents.items() if k.name not in dyn_fluents}

    ground_actions = []
    for schema in sorted(domain.actions, key=lambda s: s.name):
        for binding in _bindings(schema, by_type, static_facts, dyn_preds, prune_static):
            pos, neg = [], []
            _expand(schema.precondition, binding, by_type, pos, neg)
            if prune_static:
                if any(p.predicate not in dyn_preds and p not in init_atoms for p in pos):
                    continue
                if any(n.predicate not in dyn_preds and n in init_atoms for n in neg):
                    continue
            add = [x.substitute(binding) for x in schema.add]
            delete = [x.substitute(binding) for x in schema.delete]
            incs = []
            cost = 0.0 if metric is not None else 1.0
            undefined = False
            for inc in schema.numeric:
                target = inc.target.substitute(binding)
                if target.name not in dyn_fluents:
                    raise SemanticError(f"fluent {target} is increased but not dynamic")
                if isinstance(inc.value, FluentTerm):
                    src = inc.value.substitute(binding)
                    if src.name in dyn_fluents:
                        value = src
                    elif src in static_fluents:
                        value = float(static_fluents[src])
                    else:
                        # reading an undefined fluent makes this ground action inapplicable
                        undefined = True
                        break
                else:
                    value = float(inc.value)
                if target not in problem.init_fluents:
                    raise SemanticError(f"fluent {target} has no initial value")
                if metric is not None and target == metric:
                    if isinstance(value, FluentTerm):
                        raise UnsupportedFeature("state-dependent action cost")
                    cost += value
                incs.append((target, value))
            if undefined:
                continue
            args = tuple(binding[p.name] for p in schema.params)
            ground_actions.append((schema.name, args, pos, neg, add, delete, tuple(incs), cost))

    ground_actions.sort(key=lambda g: (g[0], g[1]))
    atoms, index = [], {}

    def intern(atom):
        i = index.get(atom)
        if i is None:
            i = index[atom] = len(atoms)
            atoms.append(atom)
        return i

    for a in problem.init:
        intern(a)
    goal_pos, goal_neg = [], []
    _expand(problem.goal, {}, by_type, goal_pos, goal_neg)
    result = []
    for name, args, pos, neg, add, delete, incs, cost in ground_actions:
        result.append(GroundAction(name, args, frozenset(map(intern, pos)), frozenset(map(intern, neg)),
                                   frozenset(map(intern, add)), frozenset(map(intern, delete)), incs, cost))
    gp = frozenset(map(intern, goal_pos))
    gn = frozenset(map(intern, goal_neg))
    fluents = tuple(sorted(((k, float(v)) for k, v in problem.init_fluents.items() if k.name in dyn_fluents),
                           key=_fkey))
    init = State(frozenset(index[a] for a in problem.init), fluents)
    return GroundTask(tuple(atoms), index, tuple(result), init, gp, gn, metric, static_fluents)


def _bindings(schema, by_type, static_facts, dyn_preds, prune_static):
    params = list(schema.params)
    if not prune_static:
        names = [p.name for p in params]
        for combo in itertools.product(*(by_type.get(p.type, []) for p in params)):
            yield dict(zip(names, combo))
        return
    static_lits = [c.atom for c in schema.precondition
                   if isinstance(c, Literal) and c.positive and c.atom.predicate not in dyn_preds]

    types = {p.name: p.type for p in params}

    def candidates(var, binding):
        pool = by_type.get(types[var], [])
        allowed = None
        for lit in static_lits:
            if var not in lit.args:
                continue
            idx = [i for i, a in enumerate(lit.args) if a == var]
            fixed = [(i, binding.get(a) if a.startswith("?") else a) for i, a in enumerate(lit.args)
                     if a != var and (not a.startswith("?") or a in binding)]
            vals = set()
            for args in static_facts.get(lit.predicate, ()):
                if len({args[i] for i in idx}) == 1 and all(args[i] == v for i, v in fixed):
                    vals.add(args[idx[0]])
            allowed = vals if allowed is None else allowed & vals
        if allowed is None:
            return pool
        return [o for o in pool if o in allowed]

    def rec(i, binding):
        if i == len(params):
            yield dict(binding)
            return
        var = params[i].name
        for o in candidates(var, binding):
            binding[var] = o
            yield from rec(i + 1, binding)
            del binding[var]

    yield from rec(0, {})


# plans ------------------------------------------------------------------------

@dataclass(frozen=True)
class Plan:
    actions: tuple
    cost: float = 0.0

    def __len__(self):
        return len(self.actions)

    def to_text(self) -> str:
        lines = [str(a) for a in self.actions]
        lines.append(f"; cost = {_fmt(self.cost)}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    from .printer import fmt_number
    return fmt_number(v)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    failed_step: Optional[int] = None  # 1-based
    reason: str = ""
    final_state: Optional[State] = None
    cost: float = 0.0

    def __bool__(self):
        return self.ok


def validate_plan(task: GroundTask, plan) -> ValidationResult:
    """Replay ``plan`` (a :class:`Plan` or a sequence of ground actions)."""
    actions = plan.actions if isinstance(plan, Plan) else tuple(plan)
    state = task.init
    cost = 0.0
    for i, a in enumerate(actions, start=1):
        if not applicable(state, a):
            missing = [str(task.atoms[j]) for j in sorted(a.pre_pos - state.atoms)]
            present = [str(task.atoms[j]) for j in sorted(a.pre_neg & state.atoms)]
            why = "missing " + ", ".join(missing) if missing else "forbidden " + ", ".join(present)
            return ValidationResult(False, i, f"step {i} {a} not applicable: {why}", state, cost)
        state = apply(state, a, check=False)
        cost += a.cost
    if not task.goal_satisfied(state):
        return ValidationResult(False, None, "goal not satisfied", state, cost)
    return ValidationResult(True, None, "", state, cost)


def parse_plan(task: GroundTask, text: str) -> Plan:
    """Read plan text written by :meth:`Plan.to_text`."""
    acts = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        parts = line.strip("()").split()
        acts.append(task.find(parts[0].lower(), *[p.lower() for p in parts[1:]]))
    return Plan(tuple(acts), sum(a.cost for a in acts))
