"""Bounded unrolling of a network into a hybrid clause database.

The Boolean skeleton is plain CNF over integer literals.  Numeric content is
attached to literals: a constraint becomes active when its literal is true.
Disjunctive numeric formulas are split over fresh auxiliary literals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from . import expr as E
from .interval import Interval
from .model import (DURATION, ClosedFormFlow, Goal, Network, OdeFlow,
                    flow_targets, written_vars)


class EncodingOverflow(RuntimeError):
    pass


class UnknownKey(KeyError):
    pass


# ---------------------------------------------------------------- variables

@dataclass(frozen=True)
class ModeVar:
    step: int
    automaton: int
    mode: str

    def __str__(self):
        return f"mode[{self.step}][{self.automaton}]={self.mode}"


@dataclass(frozen=True)
class SyncVar:
    step: int
    label: str

    def __str__(self):
        return f"sync[{self.step}]:{self.label}"


@dataclass(frozen=True)
class AuxVar:
    id: int
    kind: str
    info: tuple = ()

    def __str__(self):
        return f"aux{self.id}:{self.kind}{list(self.info)}"


def start_name(var: str, step: int) -> str:
    return f"{var}@0#{step}"


def end_name(var: str, step: int) -> str:
    return f"{var}@t#{step}"


def delay_name(step: int) -> str:
    return f"t#{step}"


@dataclass(frozen=True)
class NumVar:
    role: str  # "start", "end" or "delay"
    step: int
    var: str | None = None

    @property
    def name(self) -> str:
        if self.role == "start":
            return start_name(self.var, self.step)
        if self.role == "end":
            return end_name(self.var, self.step)
        return delay_name(self.step)


# ---------------------------------------------------------------- theory atoms

@dataclass(frozen=True)
class Atom:
    """An algebraic constraint over unrolled variable names."""
    constraint: E.Constraint
    steps: tuple = ()


@dataclass(frozen=True)
class OdeAtom:
    """The owned variables of one automaton follow an ODE during one step."""
    step: int
    automaton: int
    mode: str
    rates: tuple  # ((var, Term over plain names), ...)
    params: tuple  # plain names read but constant during the step
    domain: tuple  # ((var, Interval), ...) global bounds of the targets
    clip: tuple  # invariant constraints over targets and params (plain names)

    @property
    def targets(self) -> list:
        return [v for v, _ in self.rates]

    @property
    def steps(self) -> tuple:
        return (self.step,)


@dataclass(frozen=True)
class ExplicitFlow:
    """Closed-form solution x@t = term(x@0..., t), used to sample states mid-step."""
    step: int
    automaton: int
    solutions: tuple  # ((var, Term over x@0 names and t), ...)

    @property
    def steps(self) -> tuple:
        return (self.step,)


@dataclass(frozen=True)
class InvariantObligation:
    """The mode invariant must hold at every instant of the step."""
    step: int
    automaton: int
    mode: str
    formula: E.Formula  # plain names

    @property
    def steps(self) -> tuple:
        return (self.step,)


# ---------------------------------------------------------------- database

@dataclass
class ClauseDB:
    network: Network
    goal: Goal
    k: int
    max_delay: float
    bool_vars: list = field(default_factory=list)  # id - 1 -> BoolVar
    var_ids: dict = field(default_factory=dict)
    num_vars: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)  # numvar name -> Interval
    clauses: list = field(default_factory=list)
    attached: dict = field(default_factory=dict)  # literal -> [atom]
    unconditional: list = field(default_factory=list)
    transition_clauses: dict = field(default_factory=dict)  # step -> [(automaton, [aux lits])]

    @property
    def num_bool(self) -> int:
        return len(self.bool_vars)

    def var(self, lit: int):
        return self.bool_vars[abs(lit) - 1]

    def describe(self, lit: int) -> str:
        return ("" if lit > 0 else "!") + str(self.var(lit))

    def mode_literal(self, i: int, j: int, q: str) -> int:
        try:
            return self.var_ids[ModeVar(i, j, q)]
        except KeyError:
            raise UnknownKey((i, j, q)) from None

    def sync_literal(self, i: int, label: str) -> int:
        try:
            return self.var_ids[SyncVar(i, label)]
        except KeyError:
            raise UnknownKey((i, label)) from None

    def mode_literals(self, i: int, j: int) -> list:
        a = self.network[j]
        return [self.var_ids[ModeVar(i, j, q)] for q in a.mode_names]

    def theory_atoms(self, lit: int) -> list:
        return self.attached.get(lit, [])

    def dump(self) -> str:
        """SMT-LIB flavoured listing for inspection only."""
        out = [f"; k={self.k} M={self.max_delay!r}"]
        for nv in self.num_vars:
            b = self.bounds[nv.name]
            out.append(f"(declare-fun |{nv.name}| () Real) ; [{b[0]!r}, {b[1]!r}]")
        for i, v in enumerate(self.bool_vars, 1):
            out.append(f"(declare-fun b{i} () Bool) ; {v}")
        for a in self.unconditional:
            out.append(f"(assert {_atom_text(a)})")
        for c in self.clauses:
            lits = " ".join(f"b{l}" if l > 0 else f"(not b{-l})" for l in c)
            out.append(f"(assert (or {lits}))")
        for lit in sorted(self.attached, key=abs):
            for a in self.attached[lit]:
                b = f"b{lit}" if lit > 0 else f"(not b{-lit})"
                out.append(f"(assert (=> {b} {_atom_text(a)}))")
        return "\n".join(out) + "\n"


def _atom_text(a) -> str:
    if isinstance(a, Atom):
        return E.to_sexpr(a.constraint)
    if isinstance(a, OdeAtom):
        rates = " ".join(f"(= d/dt[{v}] {E.to_sexpr(t)})" for v, t in a.rates)
        return f"(ode-step {a.step} {rates})"
    if isinstance(a, InvariantObligation):
        return f"(forall-time {a.step} {E.to_sexpr(a.formula)})"
    if isinstance(a, ExplicitFlow):
        return f"(explicit-flow {a.step})"
    return repr(a)


class _Builder:
    def __init__(self, db: ClauseDB, cap: int):
        self.db = db
        self.cap = cap

    def new_bool(self, v) -> int:
        db = self.db
        if len(db.bool_vars) + len(db.num_vars) >= self.cap:
            raise EncodingOverflow(f"more than {self.cap} variables")
        db.bool_vars.append(v)
        db.var_ids[v] = len(db.bool_vars)
        return len(db.bool_vars)

    def aux(self, kind: str, *info) -> int:
        return self.new_bool(AuxVar(len(self.db.bool_vars) + 1, kind, info))

    def new_num(self, nv: NumVar, bounds) -> None:
        db = self.db
        if len(db.bool_vars) + len(db.num_vars) >= self.cap:
            raise EncodingOverflow(f"more than {self.cap} variables")
        db.num_vars.append(nv)
        db.bounds[nv.name] = Interval(*bounds)

    def clause(self, *lits) -> None:
        self.db.clauses.append(tuple(lits))

    def attach(self, lit, item, steps=()) -> None:
        """Attach a theory atom or a (possibly disjunctive) formula to ``lit``.

        ``lit`` None means unconditional.
        """
        if isinstance(item, (E.Constraint, E.And, E.Or)):
            self._attach_formula(lit, item, steps)
            return
        if lit is None:
            self.db.unconditional.append(item)
        else:
            self.db.attached.setdefault(lit, []).append(item)

    def _attach_formula(self, lit, f, steps) -> None:
        if isinstance(f, E.Constraint):
            self.attach(lit, Atom(f, tuple(steps)))
        elif isinstance(f, E.And):
            for p in f.parts:
                self._attach_formula(lit, p, steps)
        else:
            alts = [self.aux("or", *steps) for _ in f.parts]
            self.clause(*([] if lit is None else [-lit]), *alts)
            for a, p in zip(alts, f.parts):
                self._attach_formula(a, p, steps)


def _at(step: int, role: str):
    def fn(name: str) -> str:
        if role == "start":
            return start_name(name, step)
        return end_name(name, step)
    return fn


def _closed_form_names(step: int):
    def fn(name: str) -> str:
        if name == DURATION:
            return delay_name(step)
        if name.endswith("@0"):
            return start_name(name[:-2], step)
        if name.endswith("@t"):
            return end_name(name[:-2], step)
        return name
    return fn


def _update_names(step: int):
    def fn(name: str) -> str:
        if name.endswith("'"):
            return start_name(name[:-1], step + 1)
        return end_name(name, step)
    return fn


def _explicit_solutions(relation) -> tuple | None:
    """Read x@t = term(x@0, t) equalities out of a closed-form relation."""
    try:
        cs = E.atoms(relation)
    except ValueError:
        return None
    out = []
    for c in cs:
        if c.rel != "=":
            return None
        lhs, rhs = c.lhs, c.rhs
        if not (isinstance(lhs, E.Var) and lhs.name.endswith("@t")):
            lhs, rhs = rhs, lhs
        if not (isinstance(lhs, E.Var) and lhs.name.endswith("@t")):
            return None
        if any(n.endswith("@t") for n in E.free_vars(rhs)):
            return None
        out.append((lhs.name[:-2], rhs))
    return tuple(out)


def encode(network: Network, goal: Goal, k: int, max_delay: float,
           *, max_vars: int = 10 ** 6) -> ClauseDB:
    if k < 0 or not max_delay > 0:
        raise ValueError("need k >= 0 and M > 0")
    db = ClauseDB(network, goal, k, max_delay)
    b = _Builder(db, max_vars)
    n = len(network)
    labels = network.labels
    variables = network.variables
    owners = {v: os[0] for v, os in network.owners().items()}

    # variables, in the documented order
    for i in range(k + 1):
        for j, a in enumerate(network.automata):
            for q in a.mode_names:
                b.new_bool(ModeVar(i, j, q))
    for i in range(k):
        for l in labels:
            b.new_bool(SyncVar(i, l))
    for i in range(k + 1):
        for v, bnd in variables.items():
            b.new_num(NumVar("start", i, v), bnd)
            b.new_num(NumVar("end", i, v), bnd)
        b.new_num(NumVar("delay", i), (0.0, max_delay))

    # exactly one mode per automaton per step
    for i in range(k + 1):
        for j in range(n):
            lits = db.mode_literals(i, j)
            b.clause(*lits)
            for x, y in combinations(lits, 2):
                b.clause(-x, -y)

    # init
    for j, a in enumerate(network.automata):
        alts = []
        for e, (q, f) in enumerate(a.init):
            aux = b.aux("init", j, e)
            alts.append(aux)
            b.clause(-aux, db.mode_literal(0, j, q))
            b.attach(aux, E.rename(f, _at(0, "start")), (0,))
        b.clause(*alts)

    # maintain: flows and invariants
    for i in range(k + 1):
        for v in variables:
            if v not in owners:
                b.attach(None, E.Constraint(E.Var(end_name(v, i)), "=", E.Var(start_name(v, i))), (i,))
        for j, a in enumerate(network.automata):
            own = a.owned()
            for q in a.modes:
                lit = db.mode_literal(i, j, q.name)
                targets = flow_targets(q.flow)
                for v in sorted(own - targets):
                    b.attach(lit, E.Constraint(E.Var(end_name(v, i)), "=", E.Var(start_name(v, i))), (i,))
                if isinstance(q.flow, OdeFlow):
                    rates = tuple(q.flow.rates.items())
                    read = set()
                    for _, t in rates:
                        read |= E.free_vars(t)
                    params = tuple(sorted(read - set(q.flow.rates)))
                    clip = []
                    scope = set(q.flow.rates) | set(params)
                    try:
                        for c in E.atoms(q.invariant):
                            if E.free_vars(c) <= scope:
                                clip.append(c)
                    except ValueError:
                        pass
                    b.attach(lit, OdeAtom(i, j, q.name, rates, params,
                                          tuple((v, variables[v]) for v, _ in rates), tuple(clip)))
                elif isinstance(q.flow, ClosedFormFlow):
                    b.attach(lit, E.rename(q.flow.relation, _closed_form_names(i)), (i,))
                    sol = _explicit_solutions(q.flow.relation)
                    if sol is not None:
                        b.attach(lit, ExplicitFlow(i, j, tuple(
                            (v, E.rename(t, _closed_form_names(i))) for v, t in sol)))
                if q.invariant != E.TRUE:
                    b.attach(lit, E.rename(q.invariant, _at(i, "start")), (i,))
                    b.attach(lit, E.rename(q.invariant, _at(i, "end")), (i,))
                    b.attach(lit, InvariantObligation(i, j, q.name, q.invariant))

    # transitions: noop or a synchronised jump, per automaton
    for i in range(k):
        writers: dict = {}
        db.transition_clauses[i] = []
        for j, a in enumerate(network.automata):
            alts = []
            for q in a.mode_names:
                aux = b.aux("noop", i, j, q)
                alts.append(aux)
                b.clause(-aux, db.mode_literal(i, j, q))
                b.clause(-aux, db.mode_literal(i + 1, j, q))
                for l in sorted(a.alphabet):
                    b.clause(-aux, -db.sync_literal(i, l))
            for ji, jump in enumerate(a.jumps):
                aux = b.aux("trans", i, j, ji)
                alts.append(aux)
                b.clause(-aux, db.mode_literal(i, j, jump.source))
                b.clause(-aux, db.mode_literal(i + 1, j, jump.target))
                for l in sorted(a.alphabet):
                    s = db.sync_literal(i, l)
                    b.clause(-aux, s if l in jump.labels else -s)
                if jump.guard != E.TRUE:
                    b.attach(aux, E.rename(jump.guard, _at(i, "end")), (i,))
                if jump.update != E.TRUE:
                    b.attach(aux, E.rename(jump.update, _update_names(i)), (i, i + 1))
                for v in written_vars(jump):
                    writers.setdefault(v, []).append(aux)
            b.clause(*alts)
            db.transition_clauses[i].append((j, alts))
        # frame: values carry over unless some taken jump writes them
        for v in variables:
            eq = E.Constraint(E.Var(start_name(v, i + 1)), "=", E.Var(end_name(v, i)))
            ws = writers.get(v)
            if not ws:
                b.attach(None, eq, (i, i + 1))
                continue
            keep = b.aux("frame", i, v)
            b.clause(keep, *ws)
            for w in ws:
                b.clause(-w, -keep)
            b.attach(keep, eq, (i, i + 1))
        # at least one synchronisation label per transition
        b.clause(*(db.sync_literal(i, l) for l in labels))

    # goal
    names = [a.name for a in network.automata]
    for aut, q in goal.modes.items():
        b.clause(db.mode_literal(k, names.index(aut), q))
    if goal.predicate != E.TRUE:
        b.attach(None, E.rename(goal.predicate, _at(k, "end")), (k,))
    return db
