"""Trail-based CDCL core with an interval theory attached.

The public surface is deliberately small: ``get_trail``, ``assert_lit`` and
``assert_clause``.  Backtracking happens inside the solver; callers only see
the resulting verdict.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from . import icp
from .encode import ClauseDB


class UnknownLiteral(KeyError):
    pass


PREMISE, DECISION, IMPLIED = "premise", "decision", "implied"


@dataclass(frozen=True)
class TrailEntry:
    lit: int
    kind: str
    level: int
    reason: tuple | None = None


@dataclass(frozen=True)
class Verdict:
    kind: str  # "unsat", "delta-sat", "consistent", "backtrack", "unknown"
    level: int | None = None
    box: object = None
    assignment: tuple = ()

    @property
    def is_sat(self) -> bool:
        return self.kind == "delta-sat"

    @property
    def is_unsat(self) -> bool:
        return self.kind == "unsat"


CONSISTENT = Verdict("consistent")


def decisions(trail) -> list:
    return [e.lit for e in trail if e.kind == DECISION]


@dataclass
class SatStats:
    decisions: int = 0
    conflicts: int = 0
    theory_conflicts: int = 0
    learned: int = 0
    propagations: int = 0


class Solver:
    def __init__(self, db: ClauseDB, theory: icp.Theory | None = None, *,
                 trace=None, shrink: bool = True):
        self.db = db
        self.n = db.num_bool
        self.theory = theory
        self.trace = trace
        self.shrink = shrink
        n = self.n
        self.value = [0] * (n + 1)
        self.level = [-1] * (n + 1)
        self.reason: list = [None] * (n + 1)
        self.trail: list = []
        self.lim: list = []  # trail length when each level >= 1 opened
        self.qhead = 0
        self.clauses: list = []
        self.watches = defaultdict(list)
        self.learned: list = []
        self.stats = SatStats()
        self.dead = False
        self.incomplete = False
        self.next_free = 1
        # theory state per level: (box, contributors)
        self.active: list = []
        self._active_marks: list = []
        self.thead = 0
        self.tstate: list = []
        self._base_pending = theory is not None
        for c in db.clauses:
            if not self._add_clause(list(c), initial=True):
                self.dead = True
        if not self.dead:
            if theory is not None:
                self.active = [c for c in theory.base if hasattr(c, "revise")]
                self.tstate.append((theory.root, frozenset()))
            if self._propagate_all() is not None:
                self.dead = True

    # ------------------------------------------------------------ basics

    def _val(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    @property
    def decision_level(self) -> int:
        return len(self.lim)

    def _check(self, lit: int):
        if not isinstance(lit, int) or lit == 0 or abs(lit) > self.n:
            raise UnknownLiteral(lit)

    def _log(self, line: str):
        if self.trace is not None:
            self.trace.write(line + "\n")

    def _assign(self, lit: int, kind: str, reason=None):
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = self.decision_level
        self.reason[v] = reason
        self.trail.append(TrailEntry(lit, kind, self.decision_level,
                                     tuple(reason) if reason is not None else None))

    def _add_clause(self, c: list, initial: bool = False) -> bool:
        """Adds a clause at level 0; False when it is empty."""
        c = list(dict.fromkeys(c))
        if not c:
            return False
        if any(-l in c for l in c):
            return True
        if len(c) == 1:
            if self._val(c[0]) == -1:
                return False
            if self._val(c[0]) == 0:
                self._assign(c[0], PREMISE if initial else IMPLIED, None if initial else c)
            return True
        self.clauses.append(c)
        self.watches[c[0]].append(c)
        self.watches[c[1]].append(c)
        return True

    def _watch(self, c: list):
        self.clauses.append(c)
        self.watches[c[0]].append(c)
        self.watches[c[1]].append(c)

    # ------------------------------------------------------------ propagation

    def _bcp(self):
        """Unit propagation; returns a falsified clause or None."""
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead].lit
            self.qhead += 1
            f = -p
            ws = self.watches[f]
            keep = []
            k = 0
            conflict = None
            while k < len(ws):
                c = ws[k]
                k += 1
                if c[0] == f:
                    c[0], c[1] = c[1], c[0]
                if self._val(c[0]) == 1:
                    keep.append(c)
                    continue
                moved = False
                for j in range(2, len(c)):
                    if self._val(c[j]) != -1:
                        c[1], c[j] = c[j], c[1]
                        self.watches[c[1]].append(c)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(c)
                if self._val(c[0]) == -1:
                    conflict = c
                    keep.extend(ws[k:])
                    break
                self.stats.propagations += 1
                self._assign(c[0], IMPLIED, c)
            self.watches[f] = keep
            if conflict is not None:
                return conflict
        return None

    def _theory(self):
        """Cheap prune over the literals assigned since the last call."""
        if self.theory is None:
            self.thead = len(self.trail)
            return None
        new = []
        for e in self.trail[self.thead:]:
            new.extend(c for c in self.theory.by_lit.get(e.lit, ()) if hasattr(c, "revise"))
        self.thead = len(self.trail)
        self.active.extend(new)
        if self._base_pending:
            # first call: everything active so far still needs a pass
            self._base_pending = False
            new = list(self.active)
        if not new:
            return None
        box, contrib = self.tstate[-1]
        touched = set(contrib)
        r = self.theory.prune(box, self.active, initial=new, contributors=touched)
        if isinstance(r, icp.Empty):
            self.stats.theory_conflicts += 1
            expl = r.explanation
            if self.shrink and len(expl) > 1:
                expl = self.theory.shrink(expl, self.theory.prune_refutes)
            return [-s for s in sorted(expl, key=abs)]
        self.tstate[-1] = (r, frozenset(s for s in touched if s is not None))
        return None

    def _propagate_all(self):
        c = self._bcp()
        if c is not None:
            return c
        return self._theory()

    # ------------------------------------------------------------ conflicts

    def _backtrack(self, level: int):
        if level >= self.decision_level:
            return
        start = self.lim[level]
        for e in self.trail[start:]:
            v = abs(e.lit)
            self.value[v] = 0
            self.level[v] = -1
            self.reason[v] = None
            if v < self.next_free:
                self.next_free = v
        del self.trail[start:]
        del self.lim[level:]
        self.qhead = len(self.trail)
        if self.theory is not None:
            del self.tstate[level + 1:]
            del self.active[self._active_marks[level]:]
            del self._active_marks[level:]
        self.thead = len(self.trail)
        self._log(f"b {level}")

    def _new_level(self):
        self.lim.append(len(self.trail))
        if self.theory is not None:
            self._active_marks.append(len(self.active))
            self.tstate.append(self.tstate[-1])

    def _analyze(self, conflict: list):
        """First-UIP learning; returns (learnt clause, backtrack level)."""
        cur = max(self.level[abs(l)] for l in conflict)
        seen = set()
        learnt = []
        counter = 0
        clause = conflict
        idx = len(self.trail) - 1
        p = None
        while True:
            for q in clause:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if v in seen or self.level[v] <= 0:
                    continue
                seen.add(v)
                if self.level[v] >= cur:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx].lit) not in seen:
                idx -= 1
            p = self.trail[idx].lit
            idx -= 1
            counter -= 1
            if counter <= 0:
                break
            clause = self.reason[abs(p)]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda j: self.level[abs(learnt[j])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _conflict(self, clause: list) -> Verdict:
        while True:
            self.stats.conflicts += 1
            self._log("c " + " ".join(map(str, clause)) + " 0")
            if not clause or max(self.level[abs(l)] for l in clause) <= 0:
                self.dead = True
                return self._dead_verdict()
            top = max(self.level[abs(l)] for l in clause)
            self._backtrack(top)
            learnt, bt = self._analyze(clause)
            self._backtrack(bt)
            self.stats.learned += 1
            self.learned.append(tuple(learnt))
            self._log("l " + " ".join(map(str, learnt)) + " 0")
            if len(learnt) == 1:
                self._assign(learnt[0], IMPLIED, learnt)
            else:
                self._watch(learnt)
                self._assign(learnt[0], IMPLIED, learnt)
            nxt = self._propagate_all()
            if nxt is None:
                return Verdict("backtrack", self.decision_level)
            clause = nxt

    def _dead_verdict(self) -> Verdict:
        return Verdict("unknown" if self.incomplete else "unsat")

    # ------------------------------------------------------------ public surface

    def get_trail(self) -> tuple:
        return tuple(self.trail)

    def literal_value(self, lit: int) -> int:
        self._check(lit)
        return self._val(lit)

    def is_total(self) -> bool:
        return len(self.trail) == self.n

    def assert_lit(self, lit: int | None) -> Verdict:
        if self.dead:
            return self._dead_verdict()
        if lit is None:
            return self._complete()
        self._check(lit)
        v = self._val(lit)
        if v == 1:
            return self._final() if self.is_total() else CONSISTENT
        if v == -1:
            return Verdict("backtrack", self.decision_level)
        self._decide(lit)
        c = self._propagate_all()
        if c is not None:
            return self._conflict(c)
        if self.is_total():
            return self._final()
        return CONSISTENT

    def _decide(self, lit: int):
        self.stats.decisions += 1
        self._new_level()
        self._assign(lit, DECISION)
        self._log(f"d {lit}")

    def _next_unassigned(self):
        v = self.next_free
        while v <= self.n and self.value[v] != 0:
            v += 1
        self.next_free = v
        return v if v <= self.n else None

    def _complete(self) -> Verdict:
        while True:
            if self.dead:
                return self._dead_verdict()
            v = self._next_unassigned()
            if v is None:
                return self._final()
            self._decide(v)
            c = self._propagate_all()
            if c is not None:
                r = self._conflict(c)
                if r.kind in ("unsat", "unknown"):
                    return r

    def true_literals(self) -> list:
        return [e.lit for e in self.trail if e.lit > 0]

    def _final(self) -> Verdict:
        lits = [e.lit for e in self.trail]
        if self.theory is None:
            return Verdict("delta-sat", assignment=tuple(lits))
        try:
            r = self.theory.check(lits)
        except icp.ResourceLimit:
            self.incomplete = True
            block = [-d for d in decisions(self.trail)]
            self._log("r resource limit")
            return self._conflict(block)
        if isinstance(r, icp.DeltaSat):
            return Verdict("delta-sat", box=r.box, assignment=tuple(lits))
        self.stats.theory_conflicts += 1
        expl = r.explanation
        if self.shrink and len(expl) > 1:
            # a subset proof may cost somewhat more than the original one, not much more
            budget = min(2000, 2 * r.boxes + 50)
            th = self.theory
            expl = th.shrink(expl, lambda sub: th.prune_refutes(sub) or th.check_refutes(sub, budget))
        return self._conflict([-s for s in sorted(expl, key=abs)])

    def assert_clause(self, clause) -> Verdict:
        if self.dead:
            return self._dead_verdict()
        c = list(dict.fromkeys(clause))
        for l in c:
            self._check(l)
        if any(-l in c for l in c):
            return CONSISTENT
        self._log("a " + " ".join(map(str, c)) + " 0")
        if not c:
            self.dead = True
            return self._dead_verdict()
        vals = [self._val(l) for l in c]
        if all(v == -1 for v in vals):
            if len(c) > 1:
                self._watch(self._order_watches(c))
            return self._conflict(c)
        if len(c) == 1:
            if self._val(c[0]) == 1 and self.level[abs(c[0])] == 0:
                return CONSISTENT
            # permanent unit: it must survive any backtrack
            self._backtrack(0)
            self._assign(c[0], IMPLIED, c)
            nxt = self._propagate_all()
            if nxt is not None:
                return self._conflict(nxt)
            return Verdict("backtrack", 0)
        c = self._order_watches(c)
        self._watch(c)
        if self._val(c[0]) == 0 and self._val(c[1]) == -1:
            self._assign(c[0], IMPLIED, c)
            nxt = self._propagate_all()
            if nxt is not None:
                return self._conflict(nxt)
        return CONSISTENT

    def _order_watches(self, c: list) -> list:
        """Put true/unassigned literals first, then the latest false ones."""
        def key(l):
            v = self._val(l)
            if v == 1:
                return (0, 0)
            if v == 0:
                return (1, 0)
            return (2, -self.level[abs(l)])
        return sorted(c, key=key)
