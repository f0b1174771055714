"""Run-guided search: drive the SAT core along discrete runs of the network.

The discrete abstraction ignores continuous variables entirely.  A depth first
search over it proposes a composite run consistent with the solver's current
trail; the run's literals are then asserted one by one.  When no run extends
the trail, the decision prefix is blocked with a learned clause.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import icp
from .encode import ClauseDB, SyncVar, delay_name, encode, end_name, start_name
from .interval import Interval
from .model import CompositeRun, Goal, Network, RunState, enabled_jumps, run_costs
from .sat import DECISION, Solver, decisions

GUIDANCE = ("plain", "heuristic", "heuristic-learn")


@dataclass
class SolverConfig:
    guidance: str = "heuristic-learn"
    k: int = 1
    max_delay: float = 10.0
    delta: float = 0.1
    n_flow_steps: int = 32
    max_boxes: int = 100_000
    threads: int = 1
    timeout: float | None = None
    shrink: bool = True
    trace: object = None

    def __post_init__(self):
        if self.guidance not in GUIDANCE:
            raise ValueError(f"guidance must be one of {GUIDANCE}")
        if self.k < 0 or not self.max_delay > 0 or not self.delta > 0:
            raise ValueError("need k >= 0, M > 0 and delta > 0")


@dataclass(frozen=True)
class Entry:
    """One DFS stack entry: an initial choice, a jump or a noop."""
    source: str | None
    target: str
    labels: frozenset = frozenset()
    noop: bool = False

    def __repr__(self):
        lab = ",".join(sorted(self.labels))
        return f"{self.source or 'nil'}-{{{lab}}}->{self.target}"


class TrailView:
    """What the discrete search may see of a trail: falsified mode and sync literals."""

    def __init__(self, db: ClauseDB, trail=()):
        self.db = db
        self.false = {-e.lit for e in trail if e.lit < 0}

    def mode_false(self, step: int, i: int, q: str) -> bool:
        return self.db.mode_literal(step, i, q) in self.false

    def sync_false(self, step: int, label: str) -> bool:
        return self.db.sync_literal(step, label) in self.false


def filter_successors(succ, i: int, network: Network, stack, step: int, view: TrailView) -> list:
    n = len(network)
    siblings = stack[len(stack) - len(stack) % n:]
    alpha_i = network[i].alphabet
    # the last automaton of a step may not noop when everyone else did: some label must fire
    idle = step > 0 and i == n - 1 and all(s.noop for s in siblings)
    out = []
    for c in succ:
        if view.mode_false(step, i, c.target):
            continue
        if idle and c.noop:
            continue
        if step > 0 and any(view.sync_false(step - 1, l) for l in c.labels & alpha_i):
            continue
        ok = True
        for j, s in enumerate(siblings):
            shared = alpha_i & network[j].alphabet
            ci = c.labels & shared
            sj = s.labels & shared
            if s.noop and ci:
                ok = False
            elif c.noop and sj:
                ok = False
            elif ci != sj:
                ok = False
            if not ok:
                break
        if ok:
            out.append(c)
    return out


def successors(network: Network, stack, i: int) -> list:
    n = len(network)
    a = network[i]
    if len(stack) < n:
        seen = []
        for q, _ in a.init:
            if q not in seen:
                seen.append(q)
        return [Entry(None, q) for q in seen]
    q = stack[len(stack) - n].target
    out = [Entry(q, j.target, frozenset(j.labels)) for j in enabled_jumps(a, q)]
    out.append(Entry(q, q, frozenset(), noop=True))
    return out


def dfs(network: Network, stack: list, costs: list, k: int, view: TrailView, memo=None):
    """Depth-first search for a full stack of n*(k+1) entries; None on failure."""
    n = len(network)
    memo = set() if memo is None else memo
    if len(stack) == n * (k + 1):
        return stack
    key = (len(stack), tuple(stack[-n:]))
    if key in memo:
        return None
    step, i = divmod(len(stack), n)
    succ = filter_successors(successors(network, stack, i), i, network, stack, step, view)
    succ.sort(key=lambda e: costs[i][e.target])
    for e in succ:
        stack.append(e)
        if dfs(network, stack, costs, k, view, memo) is not None:
            return stack
        stack.pop()
    memo.add(key)
    return None


def gen_run(network: Network, trail, costs: list, k: int, db: ClauseDB):
    """Literals of a discrete run consistent with ``trail``, or None."""
    view = TrailView(db, trail)
    stack = dfs(network, [], costs, k, view)
    if stack is None:
        return None
    return run_literals(network, stack, db)


def run_literals(network: Network, stack, db: ClauseDB) -> list:
    n = len(network)
    out = []
    for j, e in enumerate(stack):
        step, i = divmod(j, n)
        lit = db.mode_literal(step, i, e.target)
        if lit not in out:
            out.append(lit)
        if e.source is not None:
            for l in sorted(e.labels & network[i].alphabet):
                s = db.sync_literal(step - 1, l)
                if s not in out:
                    out.append(s)
    return out


def conflict_from_trail(trail) -> list | None:
    """Negated decisions; None when there are no decisions (plain unsat)."""
    ds = decisions(trail)
    if not ds:
        return None
    return [-d for d in ds]


# ---------------------------------------------------------------- outer loop

@dataclass
class HnStats:
    runs: int = 0
    learned: int = 0
    icp_checks: int = 0
    boxes: int = 0
    decisions: int = 0
    conflicts: int = 0
    seconds: float = 0.0

    def line(self) -> str:
        return (f"runs={self.runs} learned={self.learned} icp_checks={self.icp_checks} "
                f"boxes={self.boxes} decisions={self.decisions} conflicts={self.conflicts} "
                f"time={self.seconds:.2f}s")


@dataclass
class Result:
    verdict: str  # "delta-sat", "unsat" or "unknown"
    run: CompositeRun | None = None
    box: icp.Box | None = None
    assignment: tuple = ()
    stats: HnStats = field(default_factory=HnStats)
    learned_clauses: list = field(default_factory=list)
    db: ClauseDB | None = None
    reason: str = ""


class Timeout(RuntimeError):
    pass


def witness_run(db: ClauseDB, assignment, box) -> CompositeRun:
    true = {l for l in assignment if l > 0}
    net = db.network
    states = []
    names = list(net.variables)
    for i in range(db.k + 1):
        modes = []
        for j, a in enumerate(net.automata):
            qs = [q for q in a.mode_names if db.mode_literal(i, j, q) in true]
            modes.append(qs[0] if qs else None)
        if box is not None:
            dur = box[delay_name(i)]
            start = {v: box[start_name(v, i)] for v in names}
            end = {v: box[end_name(v, i)] for v in names}
        else:
            dur = Interval(0.0, 0.0)
            start, end = {}, {}
        states.append(RunState(dur, tuple(modes), start, end))
    labels = []
    for i in range(db.k):
        labels.append(frozenset(v.label for v in (db.var(l) for l in true)
                                if isinstance(v, SyncVar) and v.step == i))
    return CompositeRun(states, labels)


def hnsolve(network: Network, goal: Goal, config: SolverConfig) -> Result:
    t0 = time.monotonic()
    db = encode(network, goal, config.k, config.max_delay)
    theory = icp.Theory(db, config.delta, n_flow_steps=config.n_flow_steps,
                        max_boxes=config.max_boxes, threads=config.threads)
    if config.timeout is not None:
        theory.deadline = t0 + config.timeout
    solver = Solver(db, theory, trace=config.trace, shrink=config.shrink)
    stats = HnStats()
    learned: list = []

    def deadline():
        if config.timeout is not None and time.monotonic() - t0 > config.timeout:
            raise Timeout(f"no verdict within {config.timeout}s")

    def collect():
        stats.icp_checks = theory.stats.checks
        stats.boxes = theory.stats.boxes
        stats.decisions = solver.stats.decisions
        stats.conflicts = solver.stats.conflicts
        stats.seconds = time.monotonic() - t0

    def done(res, reason=""):
        collect()
        if res.kind == "delta-sat":
            run = witness_run(db, res.assignment, res.box)
            return Result("delta-sat", run, res.box, res.assignment, stats, learned, db)
        if res.kind == "unsat":
            return Result("unsat", stats=stats, learned_clauses=learned, db=db)
        return Result("unknown", stats=stats, learned_clauses=learned, db=db,
                      reason=reason or "resource limit")

    costs = [run_costs(a) for a in network.automata]
    try:
        if config.guidance == "plain":
            while True:
                deadline()
                res = solver.assert_lit(None)
                if res.kind in ("delta-sat", "unsat", "unknown"):
                    return done(res)
        while True:
            deadline()
            if solver.dead:
                return done(solver.assert_lit(None))
            trail = solver.get_trail()
            lits = gen_run(network, trail, costs, config.k, db)
            if lits is None:
                if config.guidance == "heuristic":
                    res = solver.assert_lit(None)
                    if res.kind in ("delta-sat", "unsat", "unknown"):
                        return done(res)
                    continue
                clause = conflict_from_trail(trail)
                if clause is None:
                    solver.dead = True
                    return done(solver.assert_lit(None))
                learned.append(tuple(clause))
                stats.learned += 1
                res = solver.assert_clause(clause)
                if res.kind in ("unsat", "unknown", "delta-sat"):
                    return done(res)
                continue
            stats.runs += 1
            res = None
            broke = False
            for lit in lits:
                res = solver.assert_lit(lit)
                if res.kind in ("delta-sat", "unsat", "unknown"):
                    return done(res)
                if res.kind == "backtrack":
                    broke = True
                    break
            if broke:
                continue
            res = solver.assert_lit(None)
            if res.kind in ("delta-sat", "unsat", "unknown"):
                return done(res)
    except (Timeout, icp.Deadline) as e:
        collect()
        return Result("unknown", stats=stats, learned_clauses=learned, db=db, reason=str(e))


__all__ = [
    "DECISION", "Entry", "HnStats", "Result", "SolverConfig", "TrailView", "conflict_from_trail",
    "dfs", "filter_successors", "gen_run", "hnsolve", "run_literals", "successors", "witness_run",
]
