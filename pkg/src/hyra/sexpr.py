"""Minimal s-expression reader with source positions."""

from __future__ import annotations

import re
from dataclasses import dataclass


class ModelSyntaxError(ValueError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    col: int

    def __repr__(self):
        return self.text


class SList(list):
    """A parenthesised list that remembers where it started."""

    def __init__(self, items=(), line: int = 0, col: int = 0):
        super().__init__(items)
        self.line = line
        self.col = col

    @property
    def head(self) -> str | None:
        if self and isinstance(self[0], Atom):
            return self[0].text
        return None


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def read_all(text: str) -> list:
    """Parse every top-level form in ``text``."""
    stack: list = [SList()]
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        tok = m.group(0)
        col = pos - line_start + 1
        if tok == "(":
            stack.append(SList(line=line, col=col))
        elif tok == ")":
            if len(stack) == 1:
                raise ModelSyntaxError(line, col, "unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        elif tok[0].isspace() or tok[0] == ";":
            pass
        else:
            stack[-1].append(Atom(tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    if len(stack) != 1:
        open_ = stack[-1]
        raise ModelSyntaxError(open_.line, open_.col, "unclosed '('")
    return list(stack[0])


def where(node) -> tuple:
    return (node.line, node.col)


def fail(node, message: str):
    line, col = where(node) if node is not None else (0, 0)
    raise ModelSyntaxError(line, col, message)
