"""Validated interval enclosures of ODE trajectories.

Each integration step first finds an a priori box ``B`` that contains the
trajectory over the whole step, then tightens the grid value with a second
order Taylor step whose remainder is evaluated over ``B``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from . import expr as E
from . import interval as iv
from .interval import Interval


class EnclosureBlowup(ArithmeticError):
    pass


class NotDifferentiable(ValueError):
    pass


def diff(t: E.Term, x: str) -> E.Term:
    """Symbolic partial derivative; just enough for the Taylor remainder."""
    if isinstance(t, E.Const):
        return E.Const(0.0)
    if isinstance(t, E.Var):
        return E.Const(1.0 if t.name == x else 0.0)
    if isinstance(t, E.Pow):
        if t.n == 0:
            return E.Const(0.0)
        return E.Const(float(t.n)) * E.Pow(t.base, t.n - 1) * diff(t.base, x)
    op, args = t.op, t.args
    if op in ("+", "-"):
        return E.App(op, (diff(args[0], x), diff(args[1], x)))
    if op == "neg":
        return -diff(args[0], x)
    if op == "*":
        a, b = args
        return diff(a, x) * b + a * diff(b, x)
    if op == "/":
        a, b = args
        return (diff(a, x) * b - a * diff(b, x)) / E.Pow(b, 2)
    if op == "sin":
        return E.App("cos", args) * diff(args[0], x)
    if op == "cos":
        return -(E.App("sin", args) * diff(args[0], x))
    if op == "exp":
        return t * diff(args[0], x)
    if op == "sqrt":
        return diff(args[0], x) / (E.Const(2.0) * t)
    raise NotDifferentiable(op)


def _mentions(t: E.Term, x: str) -> bool:
    return x in E.term_vars(t)


def second_derivative(rates: dict) -> dict | None:
    """x'' = (Df . f)(x) for every target, or None if some rate has no derivative."""
    out = {}
    try:
        for v, f in rates.items():
            parts = [diff(f, u) * g for u, g in rates.items() if _mentions(f, u)]
            out[v] = E.sum_terms(parts)
    except NotDifferentiable:
        return None
    return out


@dataclass
class Segment:
    t0: float
    t1: float
    box: dict  # encloses every state over [t0, t1]


@dataclass
class Tube:
    grid: list  # (time, box) pairs; box encloses the state at that instant
    segments: list
    stop: float  # trajectories cannot be continued past this time
    complete: bool  # False when integration gave up before the horizon
    _times: list | None = field(default=None, repr=False, compare=False)
    _ends: list | None = field(default=None, repr=False, compare=False)

    def over(self, lo: float, hi: float):
        """Hull of everything the tube knows about times in [lo, hi]; None if unknown."""
        if self._times is None:
            self._times = [t for t, _ in self.grid]
            self._ends = [s.t1 for s in self.segments]
        out = None
        on_grid = False
        g = bisect.bisect_left(self._times, lo)
        while g < len(self.grid) and self.grid[g][0] <= hi:
            t, b = self.grid[g]
            out = b if out is None else _hull(out, b)
            on_grid = on_grid or t == lo
            g += 1
        k = bisect.bisect_left(self._ends, lo)
        while k < len(self.segments) and self.segments[k].t0 <= hi:
            s = self.segments[k]
            if (s.t1 > lo and s.t0 < hi) or (lo == hi and s.t0 <= lo <= s.t1 and not on_grid):
                out = s.box if out is None else _hull(out, s.box)
            k += 1
        return out


def _hull(a: dict, b: dict) -> dict:
    return {v: iv.hull(a[v], b[v]) for v in a}


class Integrator:
    """Integrates one ODE system; built once per mode and reused."""

    def __init__(self, rates: dict, domain: dict | None = None, clip=None,
                 h_max: float = 0.02, max_width: float = 1e4, max_steps: int = 400):
        self.targets = list(rates)
        self.rates = dict(rates)
        self.second = second_derivative(self.rates)
        self._f = {v: E.compile_interval(t) for v, t in self.rates.items()}
        self._f2 = None if self.second is None else {
            v: E.compile_interval(t) for v, t in self.second.items()}
        self.domain = dict(domain or {})
        self.clip = clip  # callable(box dict) -> box dict or None
        self.h_max = h_max
        self.max_width = max_width
        self.max_steps = max_steps  # long horizons get coarser steps instead of more of them

    def _eval(self, fns: dict, box: dict) -> dict:
        return {v: f(box) for v, f in fns.items()}

    def _restrict(self, box: dict, params: dict):
        out = {}
        for v in self.targets:
            b = box[v]
            if v in self.domain:
                b = iv.meet(b, self.domain[v])
                if b is None:
                    return None
            out[v] = b
        if self.clip is not None:
            full = self.clip({**params, **out})
            if full is None:
                return None
            out = {v: full[v] for v in self.targets}
        return out

    def step(self, x: dict, params: dict, h: float):
        """Returns (x(h) enclosure, a priori box) or raises EnclosureBlowup."""
        env = {**params, **x}
        hh = Interval(0.0, h)
        fx = self._eval(self._f, env)
        b = {v: iv.add(x[v], iv.mul(hh, fx[v])) for v in self.targets}
        ok = False
        for _ in range(8):
            wide = {v: _inflate(b[v]) for v in self.targets}
            fb = self._eval(self._f, {**params, **wide})
            cand = {v: iv.add(x[v], iv.mul(hh, fb[v])) for v in self.targets}
            if all(wide[v][0] <= cand[v][0] and cand[v][1] <= wide[v][1] for v in self.targets):
                b = cand
                ok = True
                break
            b = {v: iv.hull(wide[v], cand[v]) for v in self.targets}
        if not ok:
            raise EnclosureBlowup("no a priori enclosure")
        hb = Interval(h, h)
        if self.second is not None:
            rem = self._eval(self._f2, {**params, **b})
            c = Interval(0.5 * h * h, 0.5 * h * h)
            nxt = {v: iv.add(iv.add(x[v], iv.mul(hb, fx[v])), iv.mul(c, rem[v])) for v in self.targets}
        else:
            fb = self._eval(self._f, {**params, **b})
            nxt = {v: iv.add(x[v], iv.mul(hb, fb[v])) for v in self.targets}
        for v in self.targets:
            m = iv.meet(nxt[v], b[v])
            nxt[v] = m if m is not None else nxt[v]
            if not nxt[v].width <= self.max_width:
                raise EnclosureBlowup(f"{v} wider than {self.max_width}")
        return nxt, b

    def tube(self, start: dict, params: dict, horizon: float, marks=()) -> Tube:
        """Enclose trajectories from ``start`` over [0, horizon].

        ``marks`` are times that must land exactly on the grid.
        """
        x = self._restrict(start, params)
        if x is None:
            return Tube([], [], 0.0, True)
        grid = [(0.0, x)]
        segs = []
        if horizon <= 0.0:
            return Tube(grid, segs, 0.0, True)
        stops = sorted({m for m in marks if 0.0 < m < horizon} | {horizon})
        t = 0.0
        h_cap = max(self.h_max, horizon / self.max_steps)
        h_min = h_cap / 256
        for target in stops:
            h = (target - t) / max(1, math.ceil((target - t) / h_cap - 1e-9))
            while t < target:
                t1 = target if t + h >= target * (1 - 1e-12) else t + h
                try:
                    nxt, b = self.step(x, params, t1 - t)
                except EnclosureBlowup:
                    if h <= h_min:
                        return Tube(grid, segs, t, False)
                    h *= 0.5
                    continue
                b = self._restrict(b, params)
                if b is None:
                    # nothing that satisfies the clip survives into (t, t1]
                    return Tube(grid, segs, t, True)
                nxt = {v: iv.meet(nxt[v], b[v]) or nxt[v] for v in self.targets}
                nxt = self._restrict(nxt, params)
                segs.append(Segment(t, t1, b))
                if nxt is None:
                    return Tube(grid, segs, t1, True)
                grid.append((t1, nxt))
                x = nxt
                t = t1
        return Tube(grid, segs, horizon, True)


def _inflate(a) -> Interval:
    w = a[1] - a[0]
    eps = 0.1 * w + 1e-12 + 1e-12 * max(abs(a[0]), abs(a[1]))
    return Interval(a[0] - eps, a[1] + eps)


def end_enclosure(tube: Tube, duration) -> dict | None:
    """States reachable at some time in ``duration``; None when no valid time remains."""
    lo = duration[0]
    hi = min(duration[1], tube.stop)
    if lo > hi:
        return None
    if not tube.complete and duration[1] > tube.stop:
        return None
    return tube.over(lo, hi)


def flow_enclosure(rates: dict, start: dict, duration, n_steps: int = 32,
                   params: dict | None = None, h_max: float = 0.02):
    """End box and ``n_steps`` equal-time slices over [0, duration.hi]."""
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    params = dict(params or {})
    integ = Integrator(rates, h_max=h_max)
    hi = duration[1]
    marks = [duration[0]] + [hi * m / n_steps for m in range(1, n_steps)]
    tube = integ.tube(start, params, hi, marks)
    if not tube.complete:
        raise EnclosureBlowup("integration did not reach the horizon")
    end = end_enclosure(tube, duration)
    slices = []
    for m in range(n_steps):
        a, b = hi * m / n_steps, hi * (m + 1) / n_steps
        slices.append(tube.over(a, b))
    return end, slices
