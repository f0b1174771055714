"""Independent reference implementations used by the tests.

Nothing here imports solver internals beyond the plain model dataclasses, so
agreement with these oracles means something.
"""

from __future__ import annotations

import itertools
import math
import random

from hyra import expr as E
from hyra.model import Automaton, Goal, Jump, Mode, Network, ClosedFormFlow


# ---------------------------------------------------------------- discrete runs

def _step_options(a: Automaton, q: str):
    """(target, labels) choices for one automaton: every jump out of q, plus the noop."""
    out = [(j.target, frozenset(j.labels) & a.alphabet) for j in a.jumps if j.source == q]
    out.append((q, None))
    return out


def legal_successors(network: Network, modes: tuple):
    """All (label set, next mode vector) pairs allowed by the synchronisation rule."""
    labels = sorted(network.labels)
    found = set()
    options = [_step_options(a, q) for a, q in zip(network.automata, modes)]
    for r in range(1, len(labels) + 1):
        for L in itertools.combinations(labels, r):
            L = frozenset(L)
            per = []
            for a, opts in zip(network.automata, options):
                mine = L & a.alphabet
                ok = []
                for target, lab in opts:
                    if lab is None:
                        if not mine:
                            ok.append(target)
                    elif lab == mine:
                        ok.append(target)
                per.append(sorted(set(ok)))
            for nxt in itertools.product(*per):
                found.add((L, tuple(nxt)))
    return sorted(found, key=lambda p: (sorted(p[0]), p[1]))


def legal_runs(network: Network, k: int, goal: Goal | None = None) -> set:
    """Brute-force set of discrete runs ((mode vectors), (label sets)) of length k."""
    inits = [sorted({q for q, _ in a.init}) for a in network.automata]
    names = [a.name for a in network.automata]
    out = set()

    def rec(vecs, labs):
        if len(labs) == k:
            if goal is not None:
                for aut, q in goal.modes.items():
                    if vecs[-1][names.index(aut)] != q:
                        return
            out.add((tuple(vecs), tuple(labs)))
            return
        for L, nxt in legal_successors(network, vecs[-1]):
            rec(vecs + [nxt], labs + [L])

    for start in itertools.product(*inits):
        rec([tuple(start)], [])
    return out


def is_legal(network: Network, discrete) -> bool:
    vecs, labs = discrete
    for i, L in enumerate(labs):
        if (frozenset(L), tuple(vecs[i + 1])) not in set(legal_successors(network, tuple(vecs[i]))):
            return False
    return all(q in {m for m, _ in a.init} for a, q in zip(network.automata, vecs[0]))


# ---------------------------------------------------------------- SAT by brute force

def dpll(clauses, n: int, assumptions=()) -> dict | None:
    """Plain recursive DPLL with unit propagation; returns a model or None."""
    assign: dict = {}
    for l in assumptions:
        if assign.get(abs(l), l > 0) != (l > 0):
            return None
        assign[abs(l)] = l > 0
    clauses = [list(c) for c in clauses]

    def value(l, a):
        v = a.get(abs(l))
        return None if v is None else (v if l > 0 else not v)

    def solve(a):
        a = dict(a)
        while True:
            unit = None
            for c in clauses:
                vals = [value(l, a) for l in c]
                if any(v is True for v in vals):
                    continue
                free = [l for l, v in zip(c, vals) if v is None]
                if not free:
                    return None
                if len(free) == 1:
                    unit = free[0]
                    break
            if unit is None:
                break
            a[abs(unit)] = unit > 0
        for v in range(1, n + 1):
            if v not in a:
                for pol in (True, False):
                    r = solve({**a, v: pol})
                    if r is not None:
                        return r
                return None
        return a

    return solve(assign)


def entailed(clauses, n: int, clause) -> bool:
    """True when every model of ``clauses`` satisfies ``clause``."""
    return dpll(clauses, n, [-l for l in clause]) is None


# ---------------------------------------------------------------- numerics

def rk4(f, y0, t1: float, h: float = 1e-5):
    """Classic fourth order Runge-Kutta from 0 to t1; f(y) -> dy, y a list."""
    y = list(y0)
    n = max(1, math.ceil(t1 / h))
    h = t1 / n
    for _ in range(n):
        k1 = f(y)
        k2 = f([a + 0.5 * h * b for a, b in zip(y, k1)])
        k3 = f([a + 0.5 * h * b for a, b in zip(y, k2)])
        k4 = f([a + h * b for a, b in zip(y, k3)])
        y = [a + h / 6 * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4)]
    return y


def bisect_root(g, lo: float, hi: float, tol: float = 1e-12) -> float:
    glo = g(lo)
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if (g(m) > 0) == (glo > 0):
            lo, glo = m, g(m)
        else:
            hi = m
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- random networks

def random_network(rng: random.Random, *, max_automata=3, max_modes=4, max_jumps=5,
                   n_labels=3, clocks=False, caps=0.0):
    """Random discrete network, optionally passed through ``with_clocks``."""
    n = rng.randint(1, max_automata)
    pool = [f"l{i}" for i in range(n_labels)]
    automata = []
    for j in range(n):
        nm = rng.randint(1, max_modes)
        modes = [f"q{m}" for m in range(nm)]
        alphabet = frozenset(rng.sample(pool, rng.randint(1, len(pool))))
        jumps = []
        for _ in range(rng.randint(1, max_jumps)):
            src, dst = rng.choice(modes), rng.choice(modes)
            labs = frozenset(l for l in sorted(alphabet) if rng.random() < 0.5) or frozenset([rng.choice(sorted(alphabet))])
            jumps.append(Jump(src, dst, labs))
        init = tuple((m, E.TRUE) for m in rng.sample(modes, rng.randint(1, min(2, nm))))
        automata.append(Automaton(f"A{j}", {}, tuple(Mode(m) for m in modes), tuple(jumps), init, alphabet))
    net = Network(tuple(automata))
    return with_clocks(net, rng, caps) if clocks else net


def with_clocks(network: Network, rng: random.Random | None = None, caps: float = 0.0) -> Network:
    """Give automaton j a clock c{j}: it starts at 0, runs at rate 1, every jump
    needs c >= 1 and resets it.  Any discrete run can then be timed.  ``caps``
    is the chance that a mode gets the invariant c <= 0.5, which rules out
    jumping from it and can starve a run of time."""
    out = []
    for j, a in enumerate(network.automata):
        c = f"c{j}"
        flow = ClosedFormFlow(E.Var(c + "@t").eq(E.Var(c + "@0") + E.Var("t")))
        modes = []
        for q in a.modes:
            capped = caps > 0 and rng.random() < caps
            modes.append(Mode(q.name, flow, E.Var(c) <= 0.5 if capped else E.TRUE))
        jumps = tuple(Jump(jp.source, jp.target, jp.labels, E.Var(c) >= 1, E.Var(c + "'").eq(0)) for jp in a.jumps)
        init = tuple((q, E.Var(c).eq(0)) for q, _ in a.init)
        out.append(Automaton(a.name, {c: (0.0, 100.0)}, tuple(modes), jumps, init, a.alphabet))
    return Network(tuple(out))


def clock_run_feasible(network: Network, run, max_delay: float) -> bool:
    """Exact feasibility of a discrete run of a clocked network, as a linear program
    over the step durations."""
    from scipy.optimize import linprog

    vecs, labs = run
    k = len(labs)
    rows, rhs = [], []

    def le(cols, bound):
        row = [0.0] * (k + 1)
        for m in cols:
            row[m] = 1.0
        rows.append(row)
        rhs.append(bound)

    def ge(cols, bound):
        row = [0.0] * (k + 1)
        for m in cols:
            row[m] = -1.0
        rows.append(row)
        rhs.append(-bound)

    for j, a in enumerate(network.automata):
        if not a.variables:
            continue
        reset = 0
        for i in range(k + 1):
            since = range(reset, i + 1)
            inv = a.mode(vecs[i][j]).invariant
            if inv != E.TRUE:
                le(since, 0.5)
            le(since, 100.0)
            if i < k and labs[i] & a.alphabet:
                ge(since, 1.0)
                reset = i + 1
    if not rows:
        return True
    r = linprog([0.0] * (k + 1), A_ub=rows, b_ub=rhs, bounds=[(0, max_delay)] * (k + 1), method="highs")
    return r.status == 0


def random_goal(rng: random.Random, network: Network, p: float = 0.5) -> Goal:
    modes = {}
    for a in network.automata:
        if rng.random() < p:
            modes[a.name] = rng.choice(a.mode_names)
    return Goal(modes)


# ---------------------------------------------------------------- random constraint sets

def random_term(rng: random.Random, names, depth: int = 3) -> E.Term:
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.7:
            return E.Var(rng.choice(names))
        return E.Const(round(rng.uniform(-3, 3), 2))
    kind = rng.random()
    if kind < 0.6:
        op = rng.choice(["+", "-", "*"])
        return E.App(op, (random_term(rng, names, depth - 1), random_term(rng, names, depth - 1)))
    if kind < 0.8:
        return E.Pow(random_term(rng, names, depth - 1), rng.randint(2, 3))
    op = rng.choice(["sin", "cos", "neg"])
    return E.App(op, (random_term(rng, names, depth - 1),))


def random_prune_case(rng: random.Random, n_vars: int = 3, n_constraints: int = 3, n_samples: int = 200):
    """(box, constraints, feasible sample points).  Each case carries one
    equality built through a sampled point, so equalities are exercised too."""
    names = [f"v{i}" for i in range(n_vars)]
    box = {}
    for n in names:
        lo = rng.uniform(-5, 5)
        box[n] = (lo, lo + rng.uniform(0.1, 6))
    pts = [{n: rng.uniform(*box[n]) for n in names} for _ in range(n_samples)]
    cs = []
    for _ in range(n_constraints):
        t = random_term(rng, names)
        vals = sorted(E.eval_point(t, p) for p in pts)
        cut = vals[rng.randrange(len(vals))]
        cs.append(E.Constraint(t, rng.choice([">=", "<="]), E.Const(cut)))
    anchor = pts[0]
    t = random_term(rng, names)
    cs.append(E.Constraint(t, "=", E.Const(E.eval_point(t, anchor))))
    feasible = [p for p in pts if all(E.holds(c, p) for c in cs)]
    return box, cs, feasible
