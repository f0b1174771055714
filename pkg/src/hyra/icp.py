"""Interval constraint propagation: boxes, contractors, branch and prune.

Constraints are compiled against a fixed variable index so a box is just two
float lists.  Every contractor carries a ``source`` (normally a solver
literal) which is what explanations are made of.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import encode as enc
from . import expr as E
from . import interval as iv
from .flow import EnclosureBlowup, Integrator, end_enclosure, flow_enclosure  # noqa: F401
from .interval import INF, Interval
from .model import ClosedFormFlow, flow_targets


class ResourceLimit(RuntimeError):
    """Branch and prune gave up; the question stays open."""


class Inconclusive(ResourceLimit):
    """Some box could not be refuted or certified at the branching threshold."""


class Deadline(RuntimeError):
    """Wall-clock budget exhausted; unlike ResourceLimit this ends the whole solve."""


class NothingToBranch(ValueError):
    pass


class Emptied(Exception):
    pass


# ---------------------------------------------------------------- boxes

class Box:
    __slots__ = ("names", "index", "lo", "hi")

    def __init__(self, names, lo, hi, index=None):
        self.names = names
        self.index = index if index is not None else {n: i for i, n in enumerate(names)}
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        names = list(d)
        return cls(names, [float(d[n][0]) for n in names], [float(d[n][1]) for n in names])

    def copy(self) -> "Box":
        return Box(self.names, list(self.lo), list(self.hi), self.index)

    def __getitem__(self, name: str) -> Interval:
        i = self.index[name]
        return Interval(self.lo[i], self.hi[i])

    def __contains__(self, name) -> bool:
        return name in self.index

    def __len__(self):
        return len(self.names)

    def get(self, i: int) -> Interval:
        return Interval(self.lo[i], self.hi[i])

    def as_dict(self) -> dict:
        return {n: Interval(self.lo[i], self.hi[i]) for i, n in enumerate(self.names)}

    def items(self):
        return self.as_dict().items()

    def midpoint(self) -> dict:
        return {n: Interval(self.lo[i], self.hi[i]).mid for i, n in enumerate(self.names)}

    def width(self) -> float:
        return max((h - l for l, h in zip(self.lo, self.hi)), default=0.0)

    def subset_of(self, other: "Box") -> bool:
        return all(other.lo[i] <= self.lo[i] and self.hi[i] <= other.hi[i]
                   for i in range(len(self.names)))

    def __repr__(self):
        inner = ", ".join(f"{n}: [{self.lo[i]:.6g}, {self.hi[i]:.6g}]" for i, n in enumerate(self.names))
        return "Box{" + inner + "}"


def as_box(box) -> Box:
    return box if isinstance(box, Box) else Box.from_dict(box)


# ---------------------------------------------------------------- HC4 contractor

def _set(lo, hi, i, r):
    """Intersect variable ``i`` with ``r`` in place."""
    a, b = lo[i], hi[i]
    na = r[0] if r[0] > a else a
    nb = r[1] if r[1] < b else b
    if na > nb:
        raise Emptied
    lo[i], hi[i] = na, nb


def _meet(x, y):
    r = iv.meet(x, y)
    if r is None:
        raise Emptied
    return r


class Hc4:
    """Forward-backward projection for ``term >= 0`` (``>`` is relaxed to ``>=``)."""

    kind = "hc4"

    def __init__(self, term: E.Term, index: dict, source=None, strict: bool = False):
        self.term = term
        self.source = source
        self.strict = strict
        self.nodes: list = []
        self.root = self._compile(term, index)
        self.vars = sorted({n[1] for n in self.nodes if n[0] == "var"})

    def _compile(self, t, index) -> int:
        if isinstance(t, E.Const):
            self.nodes.append(("const", t.value, None))
        elif isinstance(t, E.Var):
            if t.name not in index:
                raise E.UnboundVariable(t.name)
            self.nodes.append(("var", index[t.name], None))
        elif isinstance(t, E.Pow):
            a = self._compile(t.base, index)
            self.nodes.append(("pow", a, t.n))
        elif t.op == "*" and t.args[0] == t.args[1]:
            # x * x loses the dependency, x^2 does not
            a = self._compile(t.args[0], index)
            self.nodes.append(("pow", a, 2))
        elif len(t.args) == 1:
            a = self._compile(t.args[0], index)
            self.nodes.append((t.op, a, None))
        else:
            a = self._compile(t.args[0], index)
            b = self._compile(t.args[1], index)
            self.nodes.append((t.op, a, b))
        return len(self.nodes) - 1

    def forward(self, lo, hi) -> list:
        vals = [None] * len(self.nodes)
        for k, (op, a, b) in enumerate(self.nodes):
            if op == "var":
                vals[k] = Interval(lo[a], hi[a])
            elif op == "const":
                vals[k] = Interval(a, a)
            elif op == "+":
                vals[k] = iv.add(vals[a], vals[b])
            elif op == "-":
                vals[k] = iv.sub(vals[a], vals[b])
            elif op == "*":
                vals[k] = iv.mul(vals[a], vals[b])
            elif op == "/":
                y = vals[b]
                if y[0] == y[1] == 0.0:
                    raise Emptied
                vals[k] = iv.div(vals[a], y)
            elif op == "pow":
                vals[k] = iv.ipow(vals[a], b)
            elif op == "neg":
                vals[k] = iv.neg(vals[a])
            elif op == "sqrt":
                r = iv.sqrt(vals[a])
                if r is None:
                    raise Emptied
                vals[k] = r
            elif op == "exp":
                vals[k] = iv.exp(vals[a])
            elif op == "sin":
                vals[k] = iv.sin(vals[a])
            elif op == "cos":
                vals[k] = iv.cos(vals[a])
            elif op == "min":
                vals[k] = iv.imin(vals[a], vals[b])
            else:
                vals[k] = iv.imax(vals[a], vals[b])
        return vals

    def value(self, box: Box) -> Interval:
        return self.forward(box.lo, box.hi)[self.root]

    def satisfied(self, box: Box, delta: float) -> bool:
        try:
            return self.value(box)[0] >= -delta
        except Emptied:
            return False

    def revise(self, lo, hi) -> list:
        """Contract the box in place; returns the indices that moved."""
        vals = self.forward(lo, hi)
        root = vals[self.root]
        if root[0] >= 0.0:
            return []
        vals[self.root] = _meet(root, (0.0, INF))
        before = {i: (lo[i], hi[i]) for i in self.vars}
        for k in range(len(self.nodes) - 1, -1, -1):
            op, a, b = self.nodes[k]
            z = vals[k]
            if op == "var":
                _set(lo, hi, a, z)
            elif op == "const":
                if not (z[0] <= a <= z[1]):
                    raise Emptied
            elif op == "+":
                x = _meet(vals[a], iv.sub(z, vals[b]))
                vals[a] = x
                vals[b] = _meet(vals[b], iv.sub(z, x))
            elif op == "-":
                x = _meet(vals[a], iv.add(z, vals[b]))
                vals[a] = x
                vals[b] = _meet(vals[b], iv.sub(x, z))
            elif op == "*":
                x = _meet(vals[a], iv.div(z, vals[b]))
                vals[a] = x
                vals[b] = _meet(vals[b], iv.div(z, x))
            elif op == "/":
                x = _meet(vals[a], iv.mul(z, vals[b]))
                vals[a] = x
                vals[b] = _meet(vals[b], iv.div(x, z))
            elif op == "neg":
                vals[a] = _meet(vals[a], iv.neg(z))
            elif op == "pow":
                vals[a] = _pow_back(vals[a], z, b)
            elif op == "sqrt":
                z = _meet(z, (0.0, INF))
                vals[a] = _meet(vals[a], iv.sqr(z))
            elif op == "exp":
                r = iv.log(z)
                if r is None:
                    raise Emptied
                vals[a] = _meet(vals[a], r)
            elif op == "min":
                vals[a] = _meet(vals[a], (z[0], INF))
                vals[b] = _meet(vals[b], (z[0], INF))
            elif op == "max":
                vals[a] = _meet(vals[a], (-INF, z[1]))
                vals[b] = _meet(vals[b], (-INF, z[1]))
            # sin and cos are not inverted
        return [i for i in self.vars if (lo[i], hi[i]) != before[i]]

    def __repr__(self):
        return f"Hc4({E.to_sexpr(self.term)} {'>' if self.strict else '>='} 0)"


def _pow_back(x, z, n: int):
    if n == 0:
        if not (z[0] <= 1.0 <= z[1]):
            raise Emptied
        return x
    r = iv.nth_root_hull(z, n)
    if r is None:
        raise Emptied
    if n % 2 == 1:
        return _meet(x, r)
    m_lo = iv.nth_root_hull((max(z[0], 0.0), max(z[0], 0.0)), n)
    inner = max(0.0, m_lo[0]) if m_lo is not None else 0.0
    parts = [iv.meet(x, (inner, r[1])), iv.meet(x, (r[0], -inner))]
    parts = [p for p in parts if p is not None]
    if not parts:
        raise Emptied
    return parts[0] if len(parts) == 1 else iv.hull(parts[0], parts[1])


def compile_constraint(c: E.Constraint, index: dict, source=None) -> list:
    return [Hc4(t, index, source, strict=(rel == ">")) for t, rel in c.canonical()]


# ---------------------------------------------------------------- ODE contractor

class _Clip:
    """Prunes a small named box with a few HC4 passes."""

    def __init__(self, constraints, names):
        self.names = list(names)
        self.index = {n: i for i, n in enumerate(self.names)}
        self.hc4 = [h for c in constraints for h in compile_constraint(c, self.index)]

    def __call__(self, box: dict):
        lo = [box[n][0] for n in self.names]
        hi = [box[n][1] for n in self.names]
        try:
            for _ in range(2):
                for h in self.hc4:
                    h.revise(lo, hi)
        except Emptied:
            return None
        return {n: Interval(lo[i], hi[i]) for i, n in enumerate(self.names)}


class OdeContractor:
    """Links start values, end values and duration of one ODE step."""

    kind = "ode"

    def __init__(self, atom: enc.OdeAtom, index: dict, source=None, h_max: float = 0.02):
        self.atom = atom
        self.source = source
        i = atom.step
        self.targets = atom.targets
        rates = dict(atom.rates)
        clip = _Clip(atom.clip, self.targets + list(atom.params)) if atom.clip else None
        dom = dict(atom.domain)
        self.fwd = Integrator(rates, dom, clip, h_max=h_max)
        self.bwd = Integrator({v: -t for v, t in rates.items()}, dom, clip, h_max=h_max)
        self.start = [index[enc.start_name(v, i)] for v in self.targets]
        self.end = [index[enc.end_name(v, i)] for v in self.targets]
        self.params = [(p, index[enc.start_name(p, i)]) for p in atom.params]
        self.t = index[enc.delay_name(i)]
        self.vars = sorted(set(self.start) | set(self.end) | {p for _, p in self.params} | {self.t})
        self._cache: dict = {}

    def _tube(self, integ, idx, lo, hi, which):
        x = {v: Interval(lo[j], hi[j]) for v, j in zip(self.targets, idx)}
        p = {n: Interval(lo[j], hi[j]) for n, j in self.params}
        key = (which, tuple(x.values()), tuple(p.values()), lo[self.t], hi[self.t])
        hit = self._cache.get(which)
        if hit is not None and hit[0] == key:
            return hit[1]
        tube = integ.tube(x, p, hi[self.t], (lo[self.t],))
        self._cache[which] = (key, tube)
        return tube

    def tube(self, box: Box):
        return self._tube(self.fwd, self.start, box.lo, box.hi, "f")

    def revise(self, lo, hi) -> list:
        before = {i: (lo[i], hi[i]) for i in self.vars}
        tube = self._tube(self.fwd, self.start, lo, hi, "f")
        t = self.t
        if tube.complete:
            if tube.stop < lo[t]:
                raise Emptied
            hi[t] = min(hi[t], tube.stop)
            self._prune_end(tube, lo, hi)
            if hi[t] - lo[t] < 0.5 * max(hi[t], 1e-9) and sum(
                    hi[j] - lo[j] for j in self.start) > sum(hi[j] - lo[j] for j in self.end):
                back = self._tube(self.bwd, self.end, lo, hi, "b")
                if back.complete:
                    e0 = end_enclosure(back, (lo[t], hi[t]))
                    if e0 is None:
                        raise Emptied
                    for v, j in zip(self.targets, self.start):
                        _set(lo, hi, j, e0[v])
        return [i for i in self.vars if (lo[i], hi[i]) != before[i]]

    def _prune_end(self, tube, lo, hi):
        t = self.t
        e = end_enclosure(tube, (lo[t], hi[t]))
        if e is None:
            raise Emptied
        for v, j in zip(self.targets, self.end):
            _set(lo, hi, j, e[v])
        # keep only times whose enclosure meets the end box
        pieces = [(tt, tt, b) for tt, b in tube.grid if lo[t] <= tt <= hi[t]]
        pieces += [(s.t0, s.t1, s.box) for s in tube.segments if s.t1 > lo[t] and s.t0 < hi[t]]
        ok = [(a, b) for a, b, box in pieces
              if all(box[v][0] <= hi[j] and lo[j] <= box[v][1] for v, j in zip(self.targets, self.end))]
        if not ok:
            raise Emptied
        lo[t] = max(lo[t], min(a for a, _ in ok))
        hi[t] = min(hi[t], max(b for _, b in ok))
        if lo[t] > hi[t]:
            raise Emptied

    def end_box(self, box: Box):
        tube = self.tube(box)
        if not tube.complete and box.hi[self.t] > tube.stop:
            return None
        return end_enclosure(tube, box.get(self.t))

    def satisfied(self, box: Box, delta: float) -> bool:
        e = self.end_box(box)
        if e is None:
            return False
        for v, j in zip(self.targets, self.end):
            if e[v][1] - box.lo[j] > delta or box.hi[j] - e[v][0] > delta:
                return False
        return True

    def __repr__(self):
        return f"Ode(step {self.atom.step}, {self.atom.mode})"


# ---------------------------------------------------------------- invariant obligations

class ObligationCheck:
    """Checks a mode invariant over time slices of one step.

    Values inside the step come from the active flow of each variable: an
    explicit closed form, an ODE tube, or the start value when the variable is
    constant.  Variables under an implicit closed form use the hull of their
    endpoint values.
    """

    kind = "obligation"

    def __init__(self, ob: enc.InvariantObligation, index: dict, explicit: dict,
                 odes: dict, implicit: set, source=None, n_steps: int = 32, depth: int = 14):
        self.ob = ob
        self.source = source
        self.n_steps = n_steps
        i = ob.step
        self.t_name = enc.delay_name(i)
        self.t = index[self.t_name]
        self.index = index
        self.plain = sorted(E.free_vars(ob.formula))
        self.explicit = {v: explicit[v] for v in self.plain if v in explicit}
        self.odes = {v: odes[v] for v in self.plain if v in odes and v not in self.explicit}
        self.implicit = {v for v in self.plain if v in implicit and v not in self.explicit and v not in self.odes}
        self.depth = 0 if self.odes else depth
        vs = {self.t}
        for v in self.plain:
            vs.add(index[enc.start_name(v, i)])
            vs.add(index[enc.end_name(v, i)])
        for term in self.explicit.values():
            vs |= {index[n] for n in E.free_vars(term) if n in index}
        for c in self.odes.values():
            vs |= set(c.vars)
        self.vars = sorted(vs)

    def _values(self, box: Box, a: float, b: float, tubes: dict):
        i = self.ob.step
        out = {}
        env = None
        for v in self.plain:
            if v in self.explicit:
                if env is None:
                    env = dict(box.as_dict())
                    env[self.t_name] = Interval(a, b)
                try:
                    out[v] = E.eval_interval(self.explicit[v], env)
                except E.EmptyResult:
                    return None
            elif v in self.odes:
                part = tubes[v].over(a, b)
                if part is None:
                    return None
                out[v] = part[v]
            elif v in self.implicit:
                out[v] = iv.hull(box[enc.start_name(v, i)], box[enc.end_name(v, i)])
            else:
                out[v] = box[enc.start_name(v, i)]
        return out

    def _ok(self, box, a, b, tubes, delta, depth) -> bool:
        vals = self._values(box, a, b, tubes)
        if vals is not None and _formula_delta(self.ob.formula, vals, delta):
            return True
        if depth <= 0 or b - a <= 0.0:
            return False
        m = 0.5 * (a + b)
        return self._ok(box, a, m, tubes, delta, depth - 1) and self._ok(box, m, b, tubes, delta, depth - 1)

    def satisfied(self, box: Box, delta: float) -> bool:
        tubes = {}
        for v, c in self.odes.items():
            tube = c.tube(box)
            if not tube.complete and box.hi[self.t] > tube.stop:
                return False
            tubes[v] = tube
        horizon = box.hi[self.t]
        if horizon <= 0.0:
            return self._ok(box, 0.0, 0.0, tubes, delta, 0)
        n = self.n_steps
        return all(self._ok(box, horizon * m / n, horizon * (m + 1) / n, tubes, delta, self.depth)
                   for m in range(n))

    def __repr__(self):
        return f"Obligation(step {self.ob.step}, {self.ob.mode})"


def _formula_delta(f, box: dict, delta: float) -> bool:
    if isinstance(f, E.Constraint):
        try:
            return E.delta_holds_on_box(f, box, delta)
        except E.EmptyResult:
            return False
    if isinstance(f, E.And):
        return all(_formula_delta(p, box, delta) for p in f.parts)
    return any(_formula_delta(p, box, delta) for p in f.parts)


# ---------------------------------------------------------------- prune / branch / check

@dataclass(frozen=True)
class Empty:
    explanation: frozenset


@dataclass
class DeltaSat:
    box: Box
    boxes: int = 1


@dataclass
class Unsat:
    explanation: frozenset
    boxes: int = 1


def _compile_loose(box: Box, constraints) -> list:
    out = []
    for k, c in enumerate(constraints):
        if isinstance(c, tuple):
            src, c = c
        else:
            src = c
        if isinstance(c, E.Constraint):
            out.extend(compile_constraint(c, box.index, src))
        else:
            out.append(c)
    return out


def prune(box, constraints, *, seed=None, initial=None, contributors: set | None = None,
          tol: float = 0.01, max_revisions: int | None = None):
    """Contract ``box`` to a fixpoint; returns a new Box or Empty(explanation).

    ``constraints`` may mix compiled contractors, plain constraints and
    (source, constraint) pairs.
    """
    box = as_box(box)
    cs = _compile_loose(box, constraints)
    out = box.copy()
    lo, hi = out.lo, out.hi
    watch: dict = {}
    for c in cs:
        for i in c.vars:
            watch.setdefault(i, []).append(c)
    if seed is None and initial is None:
        queue = list(cs)
    else:
        queue = list(initial or ())
        seen = {id(c) for c in queue}
        for i in seed or ():
            for c in watch.get(i, ()):
                if id(c) not in seen:
                    seen.add(id(c))
                    queue.append(c)
    queued = {id(c) for c in queue}
    touched = set() if contributors is None else contributors
    budget = max_revisions if max_revisions is not None else 50 * len(cs) + 1000
    head = 0
    while head < len(queue) and budget > 0:
        c = queue[head]
        head += 1
        queued.discard(id(c))
        budget -= 1
        old = {i: (lo[i], hi[i]) for i in c.vars}
        try:
            moved = c.revise(lo, hi)
        except Emptied:
            return Empty(frozenset(s for s in touched | {c.source} if s is not None))
        if not moved:
            continue
        touched.add(c.source)
        for i in moved:
            ow = old[i][1] - old[i][0]
            nw = hi[i] - lo[i]
            if not (nw < (1.0 - tol) * ow or (math.isinf(ow) and not math.isinf(nw))):
                continue
            for d in watch.get(i, ()):
                if id(d) not in queued and d is not c:
                    queued.add(id(d))
                    queue.append(d)
        if head > 4096:
            queue = queue[head:]
            head = 0
    return out


def branch(box, threshold: float = 0.0, candidates=None):
    """Split the widest candidate interval at its midpoint; returns (lo, hi, index)."""
    box = as_box(box)
    pool = range(len(box.names)) if candidates is None else candidates
    best, best_w = None, threshold
    for i in pool:
        w = box.hi[i] - box.lo[i]
        if w > best_w or (w == best_w and best is not None and box.names[i] < box.names[best]):
            best, best_w = i, w
    if best is None:
        raise NothingToBranch(f"no interval wider than {threshold}")
    m = 0.5 * (box.lo[best] + box.hi[best])
    if not box.lo[best] < m < box.hi[best]:
        raise NothingToBranch("interval cannot be split in floating point")
    a, b = box.copy(), box.copy()
    a.hi[best] = m
    b.lo[best] = m
    return a, b, best


def _search(box: Box, cs: list, checks: list, delta: float, threshold: float, max_boxes: int,
            rank=None, deadline=None):
    stack = [(box, None)]
    boxes = 0
    expl: set = set()
    unknown = False
    everything = cs + checks
    while stack:
        b, seed = stack.pop()
        boxes += 1
        if boxes > max_boxes:
            raise ResourceLimit(f"more than {max_boxes} boxes")
        if deadline is not None and boxes % 16 == 0 and time.monotonic() > deadline:
            raise Deadline("out of time during branch and prune")
        contrib: set = set()
        r = prune(b, cs, seed=seed, contributors=contrib)
        expl |= contrib
        if isinstance(r, Empty):
            expl |= r.explanation
            continue
        failing = [c for c in everything if not c.satisfied(r, delta)]
        if not failing:
            return DeltaSat(r, boxes), boxes, expl, unknown
        cands = set()
        for c in failing:
            cands.update(c.vars)
        if rank is not None:
            # earliest unrolling step first: later steps tighten once earlier ones are narrow
            wide = [i for i in cands if r.hi[i] - r.lo[i] > threshold]
            if wide:
                first = min(rank[i] for i in wide)
                cands = {i for i in wide if rank[i] == first}
        try:
            lo_b, hi_b, i = branch(r, threshold, sorted(cands))
        except NothingToBranch:
            unknown = True
            continue
        stack.append((hi_b, (i,)))
        stack.append((lo_b, (i,)))
    return None, boxes, expl, unknown


def delta_check(constraints, box, delta: float, *, max_boxes: int = 100_000,
                threshold: float | None = None, threads: int = 1, rank=None, deadline=None):
    """Branch and prune until a delta-sat box is found or the box is refuted.

    Raises ResourceLimit when the box budget runs out and Inconclusive when
    some leaf could be neither refuted nor certified.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    box = as_box(box)
    items = _compile_loose(box, constraints)
    cs = [c for c in items if hasattr(c, "revise")]
    checks = [c for c in items if not hasattr(c, "revise")]
    thr = delta * 1e-3 if threshold is None else threshold
    if threads <= 1:
        found, boxes, expl, unknown = _search(box, cs, checks, delta, thr, max_boxes, rank, deadline)
        if found is not None:
            return found
    else:
        roots = [box]
        while len(roots) < threads:
            nxt = []
            for r in roots:
                try:
                    a, b, _ = branch(r, thr)
                    nxt += [a, b]
                except NothingToBranch:
                    nxt.append(r)
            if len(nxt) == len(roots):
                break
            roots = nxt
        per = max(1, max_boxes // len(roots))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _search(r, cs, checks, delta, thr, per, rank, deadline), roots))
        boxes = sum(r[1] for r in results)
        for found, *_ in results:
            if found is not None:
                found.boxes = boxes
                return found
        expl = set().union(*(r[2] for r in results))
        unknown = any(r[3] for r in results)
    if unknown:
        raise Inconclusive("undecided boxes at the branching threshold")
    return Unsat(frozenset(s for s in expl if s is not None), boxes)


# ---------------------------------------------------------------- theory of a clause database

@dataclass
class Stats:
    prunes: int = 0
    checks: int = 0
    boxes: int = 0


@dataclass
class Theory:
    """Compiled numeric content of a ClauseDB, keyed by literal."""

    db: enc.ClauseDB
    delta: float = 0.1
    n_flow_steps: int = 32
    max_boxes: int = 100_000
    threads: int = 1
    h_max: float = 0.02
    shrink_budget: int = 48
    deadline: float | None = None  # time.monotonic() value
    stats: Stats = field(default_factory=Stats)

    def __post_init__(self):
        db = self.db
        self.names = [nv.name for nv in db.num_vars]
        self.index = {n: i for i, n in enumerate(self.names)}
        self.root = Box(self.names, [db.bounds[n][0] for n in self.names],
                        [db.bounds[n][1] for n in self.names], self.index)
        self.rank = [nv.step for nv in db.num_vars]
        self.base = self._compile_all(db.unconditional, None)
        self.by_lit = {lit: self._compile_all(items, lit) for lit, items in db.attached.items()}

    def _compile_all(self, items, source) -> list:
        out = []
        for a in items:
            if isinstance(a, enc.Atom):
                out.extend(compile_constraint(a.constraint, self.index, source))
            elif isinstance(a, enc.OdeAtom):
                out.append(OdeContractor(a, self.index, source, self.h_max))
            else:
                out.append(_Passive(a, source))
        return out

    def items(self, lits) -> list:
        out = list(self.base)
        for l in lits:
            out.extend(self.by_lit.get(l, ()))
        return out

    def contractors(self, lits) -> list:
        return [c for c in self.items(lits) if hasattr(c, "revise")]

    def checks_for(self, items) -> list:
        """Turn passive tokens into obligation checks wired to the active flows."""
        explicit: dict = {}
        odes: dict = {}
        for c in items:
            if isinstance(c, OdeContractor):
                for v in c.targets:
                    odes[(c.atom.step, v)] = c
            elif isinstance(c, _Passive) and isinstance(c.atom, enc.ExplicitFlow):
                for v, t in c.atom.solutions:
                    explicit[(c.atom.step, v)] = t
        implicit = self._implicit(items, explicit)
        out = []
        for c in items:
            if isinstance(c, _Passive) and isinstance(c.atom, enc.InvariantObligation):
                i = c.atom.step
                out.append(ObligationCheck(
                    c.atom, self.index,
                    {v: t for (s, v), t in explicit.items() if s == i},
                    {v: o for (s, v), o in odes.items() if s == i},
                    {v for (s, v) in implicit if s == i},
                    c.source, self.n_flow_steps))
        return out

    def _implicit(self, items, explicit) -> set:
        out = set()
        db = self.db
        for lit in {c.source for c in items if c.source is not None and c.source > 0}:
            v = db.var(lit)
            if isinstance(v, enc.ModeVar):
                q = db.network[v.automaton].mode(v.mode)
                if isinstance(q.flow, ClosedFormFlow):
                    for x in flow_targets(q.flow):
                        if (v.step, x) not in explicit:
                            out.add((v.step, x))
        return out

    def prune(self, box: Box, contractors, initial=None, contributors=None):
        self.stats.prunes += 1
        return prune(box, contractors, initial=initial, contributors=contributors)

    def check(self, lits):
        """Full delta check for the literals in ``lits``; returns DeltaSat or Unsat."""
        self.stats.checks += 1
        items = self.items(lits)
        cs = [c for c in items if hasattr(c, "revise")]
        obligations = self.checks_for(items)
        r = delta_check(cs + obligations, self.root, self.delta, max_boxes=self.max_boxes,
                        threads=self.threads, rank=self.rank, deadline=self.deadline)
        self.stats.boxes += r.boxes
        return r

    def shrink(self, expl, refuted) -> frozenset:
        """Greedy deletion: drop a literal while ``refuted(subset)`` stays true."""
        keep = sorted(expl, key=abs)
        budget = self.shrink_budget
        k = 0
        while k < len(keep) and budget > 0 and len(keep) > 1:
            trial = keep[:k] + keep[k + 1:]
            budget -= 1
            if refuted(trial):
                keep = trial
            else:
                k += 1
        return frozenset(keep)

    def prune_refutes(self, lits) -> bool:
        return isinstance(prune(self.root, self.contractors(lits)), Empty)

    def check_refutes(self, lits, max_boxes: int = 2000) -> bool:
        items = self.items(lits)
        cs = [c for c in items if hasattr(c, "revise")]
        try:
            r = delta_check(cs + self.checks_for(items), self.root, self.delta, max_boxes=max_boxes,
                            rank=self.rank, deadline=self.deadline)
        except ResourceLimit:
            return False
        return isinstance(r, Unsat)


class _Passive:
    """Attached token that only takes part in the final check."""

    kind = "passive"
    vars: list = []

    def __init__(self, atom, source):
        self.atom = atom
        self.source = source

    def satisfied(self, box, delta) -> bool:
        return True
