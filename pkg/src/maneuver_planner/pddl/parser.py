"""Domain and problem parsers for typed STRIPS with negative and universal
preconditions plus ``increase`` numeric effects and a minimize metric."""

from __future__ import annotations

from typing import Optional

from ..errors import PDDLSyntaxError, SemanticError, TypeMismatch, UnsupportedFeature
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
from .sexpr import SList, Symbol, parse_single

SUPPORTED_REQUIREMENTS = {
    ":strips", ":typing", ":negative-preconditions", ":universal-preconditions",
    ":numeric-fluents", ":fluents", ":action-costs",
}
_UNSUPPORTED_SECTIONS = {":durative-action", ":derived", ":process", ":event", ":constraints"}
_UNSUPPORTED_CONNECTIVES = {"or", "imply", "exists", "when", "preference"}
_NUMERIC_COMPARISONS = {"=", "<", ">", "<=", ">="}
_UNSUPPORTED_EFFECTS = {"decrease", "assign", "scale-up", "scale-down", "forall", "when"}


def _pos(x, fallback=None):
    src = x if hasattr(x, "line") else fallback
    return (getattr(src, "line", None), getattr(src, "column", None))


def _err(msg, x, fallback=None):
    return PDDLSyntaxError(msg, *_pos(x, fallback))


def _expect_list(x, what, parent=None):
    if not isinstance(x, list):
        raise _err(f"expected {what}", x, parent)
    return x


def _symbol(x, what, parent=None) -> str:
    if not isinstance(x, str):
        raise _err(f"expected {what}", x, parent)
    return str(x)


def _number(x, parent=None) -> float:
    try:
        return float(x)
    except (TypeError, ValueError):
        raise _err(f"expected a number, got {x!r}", x, parent) from None


def parse_typed_list(items, parent=None, allow_untyped=True):
    """``a b - t c`` -> [TypedName(a, t), TypedName(b, t), TypedName(c, object)]."""
    out, pending = [], []
    i = 0
    while i < len(items):
        tok = items[i]
        if isinstance(tok, list):
            raise _err("unexpected list in typed name list", tok, parent)
        if tok == "-":
            if i + 1 >= len(items):
                raise _err("missing type after '-'", tok, parent)
            t = items[i + 1]
            if isinstance(t, list):
                head = t[0] if t else None
                if head == "either":
                    raise UnsupportedFeature("either")
                raise _err("expected a type name", t, parent)
            if not pending:
                raise _err("'-' without preceding names", tok, parent)
            out += [TypedName(n, str(t)) for n in pending]
            pending = []
            i += 2
            continue
        pending.append(str(tok))
        i += 1
    out += [TypedName(n, "object") for n in pending]
    return out


class _DomainParser:
    def __init__(self):
        self.types = {}
        self.constants = {}
        self.predicates = {}
        self.functions = {}

    def check_type(self, t, where):
        if t != "object" and t not in self.types:
            raise SemanticError(f"undeclared type {t!r} at line {_pos(where)[0]}")

    # conditions -------------------------------------------------------
    def condition(self, expr, scope: dict) -> list:
        expr = _expect_list(expr, "a condition")
        if not expr:
            return []
        head = expr[0]
        if isinstance(head, list):
            raise _err("expected a connective or predicate name", head, expr)
        if head == "and":
            out = []
            for part in expr[1:]:
                out += self.condition(part, scope)
            return out
        if head == "not":
            if len(expr) != 2:
                raise _err("'not' takes one argument", expr)
            inner = _expect_list(expr[1], "an atom", expr)
            if inner and inner[0] in _NUMERIC_COMPARISONS:
                raise UnsupportedFeature("numeric-precondition")
            if inner and inner[0] in ("and", "not", "forall") | _UNSUPPORTED_CONNECTIVES:
                raise UnsupportedFeature(f"not over {inner[0]}")
            return [Literal(self.atom(inner, scope), False)]
        if head == "forall":
            if len(expr) != 3:
                raise _err("'forall' takes a variable list and a body", expr)
            vars_ = parse_typed_list(_expect_list(expr[1], "a variable list", expr), expr)
            inner = dict(scope)
            for v in vars_:
                if not v.name.startswith("?"):
                    raise _err(f"quantified name {v.name!r} must start with '?'", expr[1], expr)
                self.check_type(v.type, expr)
                inner[v.name] = v.type
            return [Forall(tuple(vars_), tuple(self.condition(expr[2], inner)))]
        if head in _UNSUPPORTED_CONNECTIVES:
            raise UnsupportedFeature(str(head))
        if head in _NUMERIC_COMPARISONS:
            raise UnsupportedFeature("numeric-precondition")
        return [Literal(self.atom(expr, scope), True)]

    def atom(self, expr, scope: dict) -> Atom:
        name = _symbol(expr[0], "a predicate name", expr)
        if name not in self.predicates:
            raise SemanticError(f"undeclared predicate {name!r} at line {_pos(expr)[0]}")
        args = tuple(self.term(a, scope, expr) for a in expr[1:])
        schema = self.predicates[name]
        if len(args) != len(schema.params):
            raise SemanticError(f"predicate {name} expects {len(schema.params)} arguments, "
                                f"got {len(args)} at line {_pos(expr)[0]}")
        for a, p in zip(args, schema.params):
            self.check_arg(a, p.type, scope, expr)
        return Atom(name, args)

    def term(self, x, scope, parent) -> str:
        if isinstance(x, list):
            raise UnsupportedFeature("function term as argument")
        x = str(x)
        if x.startswith("?") and x not in scope:
            raise SemanticError(f"unbound variable {x} at line {_pos(parent)[0]}")
        known = scope.get("__objects__") or self.constants
        if not x.startswith("?") and x not in known:
            raise SemanticError(f"unknown constant {x!r} at line {_pos(parent)[0]}")
        return x

    def arg_type(self, a, scope):
        if a.startswith("?"):
            return scope[a]
        objs = scope.get("__objects__") or {}
        return objs.get(a, self.constants.get(a, "object"))

    def check_arg(self, a, expected, scope, where):
        t = self.arg_type(a, scope)
        if not _subtype(self.types, t, expected):
            raise TypeMismatch(f"argument {a} of type {t} where {expected} is expected "
                               f"(line {_pos(where)[0]})")

    def fluent(self, expr, scope) -> FluentTerm:
        expr = _expect_list(expr, "a function term")
        name = _symbol(expr[0], "a function name", expr)
        if name not in self.functions:
            raise SemanticError(f"undeclared function {name!r} at line {_pos(expr)[0]}")
        args = tuple(self.term(a, scope, expr) for a in expr[1:])
        schema = self.functions[name]
        if len(args) != len(schema.params):
            raise SemanticError(f"function {name} expects {len(schema.params)} arguments at line {_pos(expr)[0]}")
        for a, p in zip(args, schema.params):
            self.check_arg(a, p.type, scope, expr)
        return FluentTerm(name, args)

    # effects ----------------------------------------------------------
    def effect(self, expr, scope, add, delete, numeric):
        expr = _expect_list(expr, "an effect")
        if not expr:
            return
        head = expr[0]
        if head == "and":
            for part in expr[1:]:
                self.effect(part, scope, add, delete, numeric)
        elif head == "not":
            if len(expr) != 2:
                raise _err("'not' takes one argument", expr)
            delete.append(self.atom(_expect_list(expr[1], "an atom", expr), scope))
        elif head == "increase":
            if len(expr) != 3:
                raise _err("'increase' takes a function term and a value", expr)
            target = self.fluent(expr[1], scope)
            val = expr[2]
            if isinstance(val, list):
                if val and val[0] in ("+", "-", "*", "/"):
                    raise UnsupportedFeature(f"arithmetic expression {val[0]}")
                value = self.fluent(val, scope)
            else:
                value = _number(val, expr)
            numeric.append(Increase(target, value))
        elif head in _UNSUPPORTED_EFFECTS:
            raise UnsupportedFeature(str(head))
        else:
            add.append(self.atom(expr, scope))

    # sections ---------------------------------------------------------
    def action(self, expr) -> ActionSchema:
        if len(expr) < 2:
            raise _err("action needs a name", expr)
        name = _symbol(expr[1], "an action name", expr)
        fields = {}
        i = 2
        while i < len(expr):
            key = expr[i]
            if key not in (":parameters", ":precondition", ":effect"):
                raise _err(f"unexpected action field {key!r}", key, expr)
            if i + 1 >= len(expr):
                raise _err(f"missing value for {key}", key, expr)
            fields[str(key)] = expr[i + 1]
            i += 2
        params = parse_typed_list(_expect_list(fields.get(":parameters", SList()), "a parameter list", expr), expr)
        scope = {}
        for p in params:
            if not p.name.startswith("?"):
                raise _err(f"parameter {p.name!r} must start with '?'", expr, expr)
            if p.name in scope:
                raise SemanticError(f"duplicate parameter {p.name} in action {name}")
            self.check_type(p.type, expr)
            scope[p.name] = p.type
        pre = self.condition(fields[":precondition"], scope) if ":precondition" in fields else []
        add, delete, numeric = [], [], []
        if ":effect" in fields:
            self.effect(fields[":effect"], scope, add, delete, numeric)
        return ActionSchema(name, tuple(params), tuple(pre), tuple(add), tuple(delete), tuple(numeric))


def _subtype(types: dict, t: str, parent: str) -> bool:
    seen = set()
    while t not in seen:
        if t == parent:
            return True
        seen.add(t)
        t = types.get(t, "object")
    return parent == "object"


def _header(expr, kind):
    expr = _expect_list(expr, "(define ...)")
    if not expr or expr[0] != "define":
        raise _err("expected (define ...)", expr[0] if expr else expr, expr)
    if len(expr) < 2 or not isinstance(expr[1], list) or len(expr[1]) != 2 or expr[1][0] != kind:
        raise _err(f"expected ({kind} <name>)", expr[1] if len(expr) > 1 else expr, expr)
    return str(expr[1][1]), expr[2:]


def parse_domain(text: str) -> Domain:
    expr = parse_single(text)
    name, sections = _header(expr, "domain")
    p = _DomainParser()
    requirements = []
    actions = []
    for sec in sections:
        sec = _expect_list(sec, "a domain section", expr)
        if not sec:
            raise _err("empty section", sec, expr)
        key = sec[0]
        if key == ":requirements":
            for r in sec[1:]:
                if r not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(str(r))
                requirements.append(str(r))
        elif key == ":types":
            for tn in parse_typed_list(sec[1:], sec):
                if tn.name != "object":
                    p.types[tn.name] = tn.type
            for t in list(p.types.values()):
                if t != "object" and t not in p.types:
                    p.types[t] = "object"
        elif key == ":constants":
            for tn in parse_typed_list(sec[1:], sec):
                p.check_type(tn.type, sec)
                p.constants[tn.name] = tn.type
        elif key == ":predicates":
            for item in sec[1:]:
                item = _expect_list(item, "a predicate declaration", sec)
                pname = _symbol(item[0], "a predicate name", item) if item else None
                if pname is None:
                    raise _err("empty predicate declaration", item, sec)
                if pname in p.predicates:
                    raise SemanticError(f"duplicate predicate {pname}")
                params = parse_typed_list(item[1:], item)
                for tn in params:
                    p.check_type(tn.type, item)
                p.predicates[pname] = PredicateSchema(pname, tuple(params))
        elif key == ":functions":
            items = sec[1:]
            i = 0
            while i < len(items):
                item = items[i]
                if item == "-":
                    if i + 1 >= len(items) or items[i + 1] != "number":
                        raise UnsupportedFeature("non-number function type")
                    i += 2
                    continue
                item = _expect_list(item, "a function declaration", sec)
                fname = _symbol(item[0], "a function name", item) if item else None
                if fname is None:
                    raise _err("empty function declaration", item, sec)
                if fname in p.functions:
                    raise SemanticError(f"duplicate function {fname}")
                params = parse_typed_list(item[1:], item)
                for tn in params:
                    p.check_type(tn.type, item)
                p.functions[fname] = FunctionSchema(fname, tuple(params))
                i += 1
        elif key == ":action":
            act = p.action(sec)
            if any(a.name == act.name for a in actions):
                raise SemanticError(f"duplicate action {act.name}")
            actions.append(act)
        elif key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(str(key))
        else:
            raise _err(f"unknown domain section {key!r}", key, sec)
    return Domain(name, tuple(requirements), p.types, p.constants, p.predicates, p.functions, tuple(actions))


def parse_problem(text: str, domain: Optional[Domain] = None) -> Problem:
    """Parse a problem; with ``domain`` given, names, arities and types are checked."""
    expr = parse_single(text)
    name, sections = _header(expr, "problem")
    domain_name = None
    objects = {}
    init, init_fluents = [], {}
    goal_expr = None
    metric = None
    for sec in sections:
        sec = _expect_list(sec, "a problem section", expr)
        if not sec:
            raise _err("empty section", sec, expr)
        key = sec[0]
        if key == ":domain":
            domain_name = _symbol(sec[1], "a domain name", sec) if len(sec) == 2 else None
            if domain_name is None:
                raise _err("expected (:domain <name>)", sec)
        elif key == ":objects":
            for tn in parse_typed_list(sec[1:], sec):
                objects[tn.name] = tn.type
        elif key == ":init":
            for item in sec[1:]:
                item = _expect_list(item, "an initial fact", sec)
                if not item:
                    raise _err("empty initial fact", item, sec)
                if item[0] == "=":
                    if len(item) != 3:
                        raise _err("expected (= (f args) value)", item)
                    term = _expect_list(item[1], "a function term", item)
                    ft = FluentTerm(_symbol(term[0], "a function name", term), tuple(str(a) for a in term[1:]))
                    init_fluents[ft] = _number(item[2], item)
                elif item[0] == "not":
                    continue
                elif isinstance(item[0], list) or item[0] in ("and", "forall", "at"):
                    raise UnsupportedFeature(f"initial {item[0]}")
                else:
                    init.append((Atom(str(item[0]), tuple(str(a) for a in item[1:])), item))
        elif key == ":goal":
            goal_expr = sec[1] if len(sec) == 2 else SList()
        elif key == ":metric":
            if len(sec) != 3:
                raise _err("expected (:metric minimize (f))", sec)
            if sec[1] != "minimize":
                raise UnsupportedFeature(f"metric {sec[1]}")
            term = _expect_list(sec[2], "a function term", sec)
            if term and term[0] in ("+", "-", "*", "/"):
                raise UnsupportedFeature("metric expression")
            metric = ("minimize", FluentTerm(_symbol(term[0], "a function name", term), tuple(str(a) for a in term[1:])))
        elif key in (":constraints", ":length"):
            raise UnsupportedFeature(str(key))
        else:
            raise _err(f"unknown problem section {key!r}", key, sec)
    if goal_expr is None:
        raise _err("problem has no :goal", expr)
    seen = set()
    atoms = []
    for a, _ in init:
        if a not in seen:
            seen.add(a)
            atoms.append(a)
    if domain is None:
        goal = _loose_condition(goal_expr)
        return Problem(name, domain_name or "", objects, tuple(atoms), init_fluents, tuple(goal), metric)

    p = _DomainParser()
    p.types, p.constants = domain.types, domain.constants
    p.predicates, p.functions = domain.predicates, domain.functions
    if domain_name is not None and domain_name != domain.name:
        raise SemanticError(f"problem is for domain {domain_name!r}, not {domain.name!r}")
    all_objects = dict(domain.constants)
    all_objects.update(objects)
    for o, t in objects.items():
        p.check_type(t, expr)
    scope = {"__objects__": all_objects}
    for a, where in init:
        p.atom(SList([Symbol(a.predicate)] + [Symbol(x) for x in a.args], where.line, where.column), scope)
        for x in a.args:
            if x not in all_objects:
                raise SemanticError(f"unknown object {x!r} in initial state")
    for ft in init_fluents:
        if ft.name not in domain.functions:
            raise SemanticError(f"undeclared function {ft.name!r} in initial state")
        if len(ft.args) != len(domain.functions[ft.name].params):
            raise SemanticError(f"function {ft.name} arity mismatch in initial state")
        for x in ft.args:
            if x not in all_objects:
                raise SemanticError(f"unknown object {x!r} in initial state")
    goal = p.condition(goal_expr, scope)
    for lit in _flat_literals(goal):
        for x in lit.atom.args:
            if not x.startswith("?") and x not in all_objects:
                raise SemanticError(f"unknown object {x!r} in goal")
    if metric is not None:
        ft = metric[1]
        if ft.name not in domain.functions:
            raise SemanticError(f"undeclared metric function {ft.name!r}")
        if ft not in init_fluents:
            raise SemanticError(f"metric fluent {ft} has no initial value")
    return Problem(name, domain_name or domain.name, objects, tuple(atoms), init_fluents, tuple(goal), metric)


def _flat_literals(conds):
    for c in conds:
        if isinstance(c, Literal):
            yield c
        else:
            yield from _flat_literals(c.body)


def _loose_condition(expr) -> list:
    """Goal parsing without a domain: structure only."""
    expr = _expect_list(expr, "a goal")
    if not expr:
        return []
    head = expr[0]
    if head == "and":
        out = []
        for part in expr[1:]:
            out += _loose_condition(part)
        return out
    if head == "not":
        inner = _expect_list(expr[1], "an atom", expr)
        return [Literal(Atom(str(inner[0]), tuple(str(a) for a in inner[1:])), False)]
    if head == "forall":
        vars_ = parse_typed_list(expr[1], expr)
        return [Forall(tuple(vars_), tuple(_loose_condition(expr[2])))]
    if head in _UNSUPPORTED_CONNECTIVES:
        raise UnsupportedFeature(str(head))
    if head in _NUMERIC_COMPARISONS:
        raise UnsupportedFeature("numeric-precondition")
    return [Literal(Atom(str(head), tuple(str(a) for a in expr[1:])), True)]
