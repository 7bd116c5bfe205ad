"""Pretty printers producing text that the parsers read back unchanged."""

from __future__ import annotations

from .model import Domain, FluentTerm, Literal, Problem, TypedName


def fmt_number(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _typed(names, group=True) -> str:
    names = list(names)
    if not names:
        return ""
    parts = []
    i = 0
    while i < len(names):
        j = i
        while group and j + 1 < len(names) and names[j + 1].type == names[i].type:
            j += 1
        chunk = " ".join(n.name for n in names[i:j + 1])
        parts.append(chunk if names[i].type == "object" and not group else f"{chunk} - {names[i].type}")
        i = j + 1
    return " ".join(parts)


def _cond(c, indent="") -> str:
    if isinstance(c, Literal):
        return str(c.atom) if c.positive else f"(not {c.atom})"
    body = " ".join(_cond(b) for b in c.body)
    if len(c.body) != 1:
        body = f"(and {body})"
    return f"(forall ({_typed(c.params)}) {body})"


def _conj(conds, indent) -> str:
    if not conds:
        return "(and)"
    inner = f"\n{indent}  ".join(_cond(c) for c in conds)
    return f"(and\n{indent}  {inner})"


def domain_to_pddl(d: Domain) -> str:
    out = [f"(define (domain {d.name})"]
    if d.requirements:
        out.append(f"  (:requirements {' '.join(d.requirements)})")
    if d.types:
        out.append(f"  (:types {_typed([TypedName(t, p) for t, p in d.types.items()])})")
    if d.constants:
        out.append(f"  (:constants {_typed([TypedName(n, t) for n, t in d.constants.items()])})")
    preds = " ".join("(" + " ".join([p.name] + ([_typed(p.params)] if p.params else [])) + ")"
                     for p in d.predicates.values())
    out.append(f"  (:predicates {preds})")
    if d.functions:
        funcs = " ".join("(" + " ".join([f.name] + ([_typed(f.params)] if f.params else [])) + ")"
                         for f in d.functions.values())
        out.append(f"  (:functions {funcs})")
    for a in d.actions:
        effects = [str(x) for x in a.add] + [f"(not {x})" for x in a.delete]
        for inc in a.numeric:
            val = str(inc.value) if isinstance(inc.value, FluentTerm) else fmt_number(inc.value)
            effects.append(f"(increase {inc.target} {val})")
        eff = "(and\n      " + "\n      ".join(effects) + ")" if effects else "(and)"
        out.append(f"  (:action {a.name}\n"
                   f"    :parameters ({_typed(a.params)})\n"
                   f"    :precondition {_conj(a.precondition, '    ')}\n"
                   f"    :effect {eff})")
    out.append(")")
    return "\n".join(out) + "\n"


def problem_to_pddl(p: Problem) -> str:
    out = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    if p.objects:
        out.append(f"  (:objects {_typed([TypedName(n, t) for n, t in p.objects.items()])})")
    init = [str(a) for a in p.init]
    init += [f"(= {ft} {fmt_number(v)})" for ft, v in p.init_fluents.items()]
    out.append("  (:init\n    " + "\n    ".join(init) + ")")
    out.append(f"  (:goal {_conj(p.goal, '  ')})")
    if p.metric is not None:
        out.append(f"  (:metric {p.metric[0]} {p.metric[1]})")
    out.append(")")
    return "\n".join(out) + "\n"
