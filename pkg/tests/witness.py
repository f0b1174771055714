"""Re-check a delta-sat answer without going through the ICP code.

Algebraic atoms are evaluated over the witness box with plain interval
arithmetic.  ODE atoms and invariant obligations are checked against point
integration started from the box, and the discrete part against the
brute-force label rule.
"""

from __future__ import annotations

import itertools

from hyra import expr as E
from hyra.encode import Atom, ExplicitFlow, InvariantObligation, OdeAtom, delay_name, end_name, start_name

from enumeration import project
from oracles import is_legal, rk4


def _point_holds(f, val, delta) -> bool:
    if isinstance(f, E.Constraint):
        return E.holds(f, val, delta)
    if isinstance(f, E.And):
        return all(_point_holds(p, val, delta) for p in f.parts)
    return any(_point_holds(p, val, delta) for p in f.parts)


def _active(db, assignment) -> list:
    items = list(db.unconditional)
    for lit in assignment:
        items.extend(db.attached.get(lit, ()))
    return items


def _ode_end_hull(atom: OdeAtom, box) -> dict:
    targets = atom.targets
    rates = dict(atom.rates)
    params = {p: box[start_name(p, atom.step)].mid for p in atom.params}
    corners = [(box[start_name(v, atom.step)].lo, box[start_name(v, atom.step)].hi) for v in targets]
    dur = box[delay_name(atom.step)]
    lo = {v: float("inf") for v in targets}
    hi = {v: float("-inf") for v in targets}

    def f(y):
        val = dict(params, **dict(zip(targets, y)))
        return [E.eval_point(rates[v], val) for v in targets]

    for start in itertools.product(*corners):
        for t in {dur.lo, dur.hi}:
            y = rk4(f, list(start), t, h=max(t / 2000, 1e-4)) if t > 0 else list(start)
            for v, yv in zip(targets, y):
                lo[v], hi[v] = min(lo[v], yv), max(hi[v], yv)
    return {v: (lo[v], hi[v]) for v in targets}


def _step_samples(db, items, box, step: int, n: int = 24):
    """States along the step from the box midpoints, sampled at n + 1 times."""
    names = list(db.network.variables)
    base = {v: box[start_name(v, step)].mid for v in names}
    T = box[delay_name(step)].mid
    odes = [a for a in items if isinstance(a, OdeAtom) and a.step == step]
    explicit = [a for a in items if isinstance(a, ExplicitFlow) and a.step == step]
    times = [T * m / n for m in range(n + 1)]
    out = [dict(base) for _ in times]
    for a in explicit:
        for v, term in a.solutions:
            for s, state in zip(times, out):
                val = {start_name(x, step): base[x] for x in names}
                val[delay_name(step)] = s
                state[v] = E.eval_point(term, val)
    for a in odes:
        targets = a.targets
        rates = dict(a.rates)
        params = {p: base[p] for p in a.params}

        def f(y):
            val = dict(params, **dict(zip(targets, y)))
            return [E.eval_point(rates[v], val) for v in targets]

        y = [base[v] for v in targets]
        prev = 0.0
        for s, state in zip(times, out):
            if s > prev:
                y = rk4(f, y, s - prev, h=max((s - prev) / 200, 1e-5))
                prev = s
            state.update(zip(targets, y))
    return out


def check_witness(db, result, delta: float) -> list:
    """Human readable failures; empty when the witness holds up."""
    fails = []
    box = result.box
    assignment = set(result.assignment)
    items = _active(db, assignment)
    bx = box.as_dict()
    for a in items:
        if isinstance(a, Atom):
            for t, _ in a.constraint.canonical():
                lo = E.eval_interval(t, bx).lo
                if lo < -delta:
                    fails.append(f"{a.constraint} evaluates to {lo} < -{delta}")
        elif isinstance(a, OdeAtom):
            hull = _ode_end_hull(a, box)
            for v, (lo, hi) in hull.items():
                end = box[end_name(v, a.step)]
                if end.hi < lo - delta or end.lo > hi + delta:
                    fails.append(f"step {a.step} {v}: end {end} misses integrated [{lo}, {hi}]")
    for step in range(db.k + 1):
        obligations = [a for a in items if isinstance(a, InvariantObligation) and a.step == step]
        if not obligations:
            continue
        for state in _step_samples(db, items, box, step):
            for ob in obligations:
                if not _point_holds(ob.formula, state, delta):
                    fails.append(f"step {step} invariant {ob.formula} fails at {state}")
                    break
    run = project(db, sorted(assignment, key=abs))
    if not is_legal(db.network, run):
        fails.append(f"discrete run {run} is not legal")
    names = [a.name for a in db.network.automata]
    for aut, q in db.goal.modes.items():
        if run[0][-1][names.index(aut)] != q:
            fails.append(f"goal mode {aut}={q} missed")
    return fails
