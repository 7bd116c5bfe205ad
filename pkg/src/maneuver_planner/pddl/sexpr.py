"""S-expression reader that keeps source positions for error messages."""

from __future__ import annotations

from ..errors import PDDLSyntaxError


class Symbol(str):
    """A lower-cased token with the line/column it was read from."""

    line: int = 0
    column: int = 0

    def __new__(cls, text, line=0, column=0):
        obj = super().__new__(cls, text)
        obj.line, obj.column = line, column
        return obj


class SList(list):
    """A parenthesized list with the position of its opening parenthesis."""

    def __init__(self, items=(), line=0, column=0):
        super().__init__(items)
        self.line, self.column = line, column


def tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, line, col
            i += 1
            col += 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        yield text[start:i], line, start_col


def parse_sexprs(text: str) -> list:
    """All top-level expressions in ``text``."""
    stack = [SList()]
    for tok, line, col in tokenize(text):
        if tok == "(":
            stack.append(SList(line=line, column=col))
        elif tok == ")":
            if len(stack) == 1:
                raise PDDLSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(Symbol(tok.lower(), line, col))
    if len(stack) > 1:
        open_ = stack[-1]
        raise PDDLSyntaxError("unclosed '('", open_.line, open_.column)
    return list(stack[0])


def parse_single(text: str):
    exprs = parse_sexprs(text)
    if len(exprs) != 1 or not isinstance(exprs[0], list):
        if not exprs:
            raise PDDLSyntaxError("empty input", 1, 1)
        bad = exprs[1] if len(exprs) > 1 else exprs[0]
        raise PDDLSyntaxError("expected exactly one parenthesized definition",
                              getattr(bad, "line", 1), getattr(bad, "column", 1))
    return exprs[0]
