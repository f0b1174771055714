"""Terms, atomic constraints and quantifier-free formulas over the reals.

Terms are immutable trees built from constants, variables and a fixed set of
function symbols.  They can be evaluated at a point or over a box, in which
case the result is an outward-rounded enclosure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

from . import interval as iv
from .interval import Interval


class UnboundVariable(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unbound variable {self.name!r}"


class DomainError(ValueError):
    """Point evaluation left the domain of a function (sqrt(-1), 1/0, ...)."""


class EmptyResult(ValueError):
    """Interval evaluation found the term undefined on the whole box."""


UNARY = ("neg", "sin", "cos", "exp", "sqrt")
BINARY = ("+", "-", "*", "/", "min", "max")


class Term:
    __slots__ = ()

    # arithmetic sugar, mostly for tests and model construction in code
    def __add__(self, other):
        return App("+", (self, as_term(other)))

    def __radd__(self, other):
        return App("+", (as_term(other), self))

    def __sub__(self, other):
        return App("-", (self, as_term(other)))

    def __rsub__(self, other):
        return App("-", (as_term(other), self))

    def __mul__(self, other):
        return App("*", (self, as_term(other)))

    def __rmul__(self, other):
        return App("*", (as_term(other), self))

    def __truediv__(self, other):
        return App("/", (self, as_term(other)))

    def __rtruediv__(self, other):
        return App("/", (as_term(other), self))

    def __neg__(self):
        return App("neg", (self,))

    def __pow__(self, n: int):
        return Pow(self, n)

    def __ge__(self, other):
        return Constraint(self, ">=", as_term(other))

    def __gt__(self, other):
        return Constraint(self, ">", as_term(other))

    def __le__(self, other):
        return Constraint(self, "<=", as_term(other))

    def __lt__(self, other):
        return Constraint(self, "<", as_term(other))

    def eq(self, other) -> Constraint:
        return Constraint(self, "=", as_term(other))


@dataclass(frozen=True, eq=True, repr=False)
class Const(Term):
    value: float

    def __repr__(self):
        return repr(self.value)


@dataclass(frozen=True, eq=True, repr=False)
class Var(Term):
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable names must be non-empty")

    def __repr__(self):
        return self.name


@dataclass(frozen=True, eq=True, repr=False)
class App(Term):
    op: str
    args: tuple

    def __post_init__(self):
        if self.op in UNARY:
            if len(self.args) != 1:
                raise ValueError(f"{self.op} takes one argument")
        elif self.op in BINARY:
            if len(self.args) != 2:
                raise ValueError(f"{self.op} takes two arguments")
        else:
            raise ValueError(f"unknown function symbol {self.op!r}")

    def __repr__(self):
        return to_sexpr(self)


@dataclass(frozen=True, eq=True, repr=False)
class Pow(Term):
    base: Term
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError("pow exponent must be a non-negative integer")

    def __repr__(self):
        return to_sexpr(self)


def as_term(x) -> Term:
    if isinstance(x, Term):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    if isinstance(x, str):
        return Var(x)
    raise TypeError(f"cannot make a term from {x!r}")


RELATIONS = (">", ">=", "=", "<=", "<")


@dataclass(frozen=True)
class Constraint:
    lhs: Term
    rel: str
    rhs: Term

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")

    def canonical(self) -> list:
        """Rewrite into ``(t, '>=')`` / ``(t, '>')`` pairs meaning t >= 0 / t > 0."""
        lhs, rhs = self.lhs, self.rhs
        if self.rel in (">", ">="):
            return [(App("-", (lhs, rhs)), self.rel)]
        if self.rel == "<":
            return [(App("-", (rhs, lhs)), ">")]
        if self.rel == "<=":
            return [(App("-", (rhs, lhs)), ">=")]
        return [(App("-", (lhs, rhs)), ">="), (App("-", (rhs, lhs)), ">=")]

    def __repr__(self):
        return to_sexpr(self)


@dataclass(frozen=True)
class And:
    parts: tuple = ()

    def __repr__(self):
        return to_sexpr(self)


@dataclass(frozen=True)
class Or:
    parts: tuple = ()

    def __repr__(self):
        return to_sexpr(self)


Formula = Union[Constraint, And, Or]
TRUE = And(())


def conj(*parts) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def atoms(f: Formula) -> list:
    """Constraints of a purely conjunctive formula; ValueError on a disjunction."""
    if isinstance(f, Constraint):
        return [f]
    if isinstance(f, And):
        out = []
        for p in f.parts:
            out.extend(atoms(p))
        return out
    raise ValueError("formula is not a conjunction of constraints")


# ---------------------------------------------------------------- traversal

def term_vars(t: Term, acc: set | None = None) -> set:
    acc = set() if acc is None else acc
    if isinstance(t, Var):
        acc.add(t.name)
    elif isinstance(t, App):
        for a in t.args:
            term_vars(a, acc)
    elif isinstance(t, Pow):
        term_vars(t.base, acc)
    return acc


def free_vars(f) -> set:
    """Variables occurring anywhere in a term, constraint or formula."""
    if isinstance(f, Term):
        return term_vars(f)
    if isinstance(f, Constraint):
        return term_vars(f.rhs, term_vars(f.lhs))
    if isinstance(f, (And, Or)):
        out = set()
        for p in f.parts:
            out |= free_vars(p)
        return out
    raise TypeError(f"not a term or formula: {f!r}")


def rename(f, mapping: Callable[[str], str] | Mapping[str, str]):
    """Rename variables; names missing from a mapping are left alone."""
    fn = mapping if callable(mapping) else (lambda n: mapping.get(n, n))
    return _rename(f, fn)


def _rename(f, fn):
    if isinstance(f, Var):
        return Var(fn(f.name))
    if isinstance(f, Const):
        return f
    if isinstance(f, App):
        return App(f.op, tuple(_rename(a, fn) for a in f.args))
    if isinstance(f, Pow):
        return Pow(_rename(f.base, fn), f.n)
    if isinstance(f, Constraint):
        return Constraint(_rename(f.lhs, fn), f.rel, _rename(f.rhs, fn))
    if isinstance(f, And):
        return And(tuple(_rename(p, fn) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_rename(p, fn) for p in f.parts))
    raise TypeError(f"not a term or formula: {f!r}")


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.op, tuple(substitute(a, mapping) for a in t.args))
    if isinstance(t, Pow):
        return Pow(substitute(t.base, mapping), t.n)
    return t


# ---------------------------------------------------------------- evaluation

def eval_point(term: Term, valuation: Mapping[str, float]) -> float:
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        try:
            return float(valuation[term.name])
        except KeyError:
            raise UnboundVariable(term.name) from None
    if isinstance(term, Pow):
        b = eval_point(term.base, valuation)
        try:
            r = b ** term.n
        except OverflowError:
            raise DomainError("overflow in pow") from None
        return float(r)
    args = [eval_point(a, valuation) for a in term.args]
    op = term.op
    try:
        if op == "+":
            r = args[0] + args[1]
        elif op == "-":
            r = args[0] - args[1]
        elif op == "*":
            r = args[0] * args[1]
        elif op == "/":
            if args[1] == 0.0:
                raise DomainError("division by zero")
            r = args[0] / args[1]
        elif op == "neg":
            r = -args[0]
        elif op == "sqrt":
            if args[0] < 0.0:
                raise DomainError("sqrt of a negative number")
            r = math.sqrt(args[0])
        elif op == "exp":
            r = math.exp(args[0])
        elif op == "sin":
            r = math.sin(args[0])
        elif op == "cos":
            r = math.cos(args[0])
        elif op == "min":
            r = min(args)
        else:
            r = max(args)
    except OverflowError:
        raise DomainError(f"overflow in {op}") from None
    if r != r:
        raise DomainError(f"{op} produced NaN")
    return r


def eval_interval(term: Term, box: Mapping[str, tuple]) -> Interval:
    """Outward-rounded enclosure of ``term`` over ``box``."""
    if isinstance(term, Const):
        return Interval(term.value, term.value)
    if isinstance(term, Var):
        try:
            lo, hi = box[term.name]
        except KeyError:
            raise UnboundVariable(term.name) from None
        return Interval(lo, hi)
    if isinstance(term, Pow):
        return iv.ipow(eval_interval(term.base, box), term.n)
    op = term.op
    if op == "*" and term.args[0] == term.args[1]:
        # same subterm on both sides: a square, not a product of independent factors
        return iv.sqr(eval_interval(term.args[0], box))
    args = [eval_interval(a, box) for a in term.args]
    if op == "+":
        return iv.add(*args)
    if op == "-":
        return iv.sub(*args)
    if op == "*":
        return iv.mul(*args)
    if op == "/":
        if args[1][0] == args[1][1] == 0.0:
            raise EmptyResult("division by the point zero")
        return iv.div(*args)
    if op == "neg":
        return iv.neg(args[0])
    if op == "sqrt":
        r = iv.sqrt(args[0])
        if r is None:
            raise EmptyResult("sqrt undefined on the whole box")
        return r
    if op == "exp":
        return iv.exp(args[0])
    if op == "sin":
        return iv.sin(args[0])
    if op == "cos":
        return iv.cos(args[0])
    if op == "min":
        return iv.imin(*args)
    return iv.imax(*args)


_UNARY = {"neg": iv.neg, "exp": iv.exp, "sin": iv.sin, "cos": iv.cos}
_BINARY = {"+": iv.add, "-": iv.sub, "*": iv.mul, "min": iv.imin, "max": iv.imax}


def compile_interval(term: Term) -> Callable[[Mapping[str, tuple]], Interval]:
    """Same result as ``eval_interval`` but with the tree walk done once up front."""
    if isinstance(term, Const):
        c = Interval(term.value, term.value)
        return lambda box: c
    if isinstance(term, Var):
        name = term.name

        def var(box):
            try:
                v = box[name]
            except KeyError:
                raise UnboundVariable(name) from None
            return v if type(v) is Interval else Interval(v[0], v[1])
        return var
    if isinstance(term, Pow):
        base, n = compile_interval(term.base), term.n
        return lambda box: iv.ipow(base(box), n)
    op = term.op
    args = [compile_interval(a) for a in term.args]
    if op == "*" and term.args[0] == term.args[1]:
        a = args[0]
        return lambda box: iv.sqr(a(box))
    if op in _BINARY:
        f, a, b = _BINARY[op], args[0], args[1]
        return lambda box: f(a(box), b(box))
    if op in _UNARY:
        f, a = _UNARY[op], args[0]
        return lambda box: f(a(box))
    # division and sqrt keep their error handling in one place
    return lambda box: eval_interval(term, box)


def holds(c: Constraint, valuation: Mapping[str, float], delta: float = 0.0) -> bool:
    """Point check of a constraint, weakened by ``delta``."""
    for t, rel in c.canonical():
        v = eval_point(t, valuation)
        if rel == ">=" and v < -delta:
            return False
        if rel == ">" and v <= -delta:
            return False
    return True


def delta_holds_on_box(c: Constraint, box: Mapping[str, tuple], delta: float) -> bool:
    """Universal reading: every point of the box satisfies the weakened constraint."""
    for t, _ in c.canonical():
        if eval_interval(t, box).lo < -delta:
            return False
    return True


# ---------------------------------------------------------------- printing

_SYM = {"neg": "-"}


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_sexpr(f) -> str:
    if isinstance(f, Const):
        return _num(f.value)
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Pow):
        return f"(^ {to_sexpr(f.base)} {f.n})"
    if isinstance(f, App):
        inner = " ".join(to_sexpr(a) for a in f.args)
        return f"({_SYM.get(f.op, f.op)} {inner})"
    if isinstance(f, Constraint):
        return f"({f.rel} {to_sexpr(f.lhs)} {to_sexpr(f.rhs)})"
    if isinstance(f, And):
        return "(and" + "".join(" " + to_sexpr(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + to_sexpr(p) for p in f.parts) + ")"
    raise TypeError(f"cannot print {f!r}")


def sum_terms(terms: Iterable[Term]) -> Term:
    terms = list(terms)
    if not terms:
        return Const(0.0)
    acc = terms[0]
    for t in terms[1:]:
        acc = App("+", (acc, t))
    return acc
