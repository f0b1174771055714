"""Networks of hybrid automata.

Variable scoping conventions used by every formula in a model:

* invariants, init sets and goal predicates mention plain variable names;
* guards mention plain names, read at the end of the step (x^t);
* updates mention plain names (x^t) and primed names ``x'`` for the start of
  the next step (x^0');
* closed-form flows mention ``x@0``, ``x@t`` and the duration ``t``;
* ODE right-hand sides mention plain names.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .expr import Constraint, Formula, Term, TRUE, free_vars
from .interval import Interval

DURATION = "t"
INFINITE_COST = math.inf


@dataclass(frozen=True)
class OdeFlow:
    rates: Mapping[str, Term]  # variable -> derivative


@dataclass(frozen=True)
class ClosedFormFlow:
    relation: Formula  # over x@0, x@t and t


@dataclass(frozen=True)
class Mode:
    name: str
    flow: OdeFlow | ClosedFormFlow | None = None
    invariant: Formula = TRUE


@dataclass(frozen=True)
class Jump:
    source: str
    target: str
    labels: frozenset = frozenset()
    guard: Formula = TRUE
    update: Formula = TRUE

    def __repr__(self):
        lab = ",".join(sorted(self.labels))
        return f"{self.source}-{{{lab}}}->{self.target}"


@dataclass(frozen=True)
class Automaton:
    name: str
    variables: Mapping[str, Interval]
    modes: tuple
    jumps: tuple
    init: tuple  # (mode name, Formula) pairs
    alphabet: frozenset = frozenset()

    def mode(self, name: str) -> Mode:
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def mode_names(self) -> list:
        return [m.name for m in self.modes]

    def mode_index(self, name: str) -> int:
        return self.mode_names.index(name)

    def owned(self) -> set:
        """Variables whose evolution some mode of this automaton defines."""
        out = set()
        for m in self.modes:
            out |= flow_targets(m.flow)
        return out


@dataclass(frozen=True)
class Network:
    automata: tuple

    def __len__(self):
        return len(self.automata)

    def __getitem__(self, i) -> Automaton:
        return self.automata[i]

    def index(self, name: str) -> int:
        for i, a in enumerate(self.automata):
            if a.name == name:
                return i
        raise KeyError(name)

    @property
    def variables(self) -> dict:
        """Union of all declared variables; shared names are unified."""
        out: dict = {}
        for a in self.automata:
            for v, b in a.variables.items():
                if v in out:
                    out[v] = Interval(max(out[v][0], b[0]), min(out[v][1], b[1]))
                else:
                    out[v] = Interval(*b)
        return out

    @property
    def labels(self) -> list:
        """Union alphabet, in order of first declaration."""
        seen = []
        for a in self.automata:
            for l in sorted(a.alphabet):
                if l not in seen:
                    seen.append(l)
        return seen

    def owners(self) -> dict:
        out: dict = {}
        for i, a in enumerate(self.automata):
            for v in a.owned():
                out.setdefault(v, []).append(i)
        return out


@dataclass(frozen=True)
class Goal:
    modes: Mapping[str, str] = field(default_factory=dict)  # automaton -> mode
    predicate: Formula = TRUE


@dataclass
class RunState:
    duration: Interval
    modes: tuple
    start: dict
    end: dict


@dataclass
class CompositeRun:
    states: list
    labels: list  # one frozenset per transition

    def __post_init__(self):
        if len(self.states) != len(self.labels) + 1:
            raise ValueError("a run has one more state than label sets")
        for s in self.states:
            if s.duration[0] < 0:
                raise ValueError("durations are non-negative")

    @property
    def steps(self) -> int:
        return len(self.labels)

    def discrete(self) -> tuple:
        """Mode vectors interleaved with label sets, continuous data dropped."""
        return (tuple(s.modes for s in self.states), tuple(frozenset(l) for l in self.labels))


# ---------------------------------------------------------------- helpers

def flow_targets(flow) -> set:
    if flow is None:
        return set()
    if isinstance(flow, OdeFlow):
        return set(flow.rates)
    return {n[:-2] for n in free_vars(flow.relation) if n.endswith("@t")}


def enabled_jumps(automaton: Automaton, mode: str) -> list:
    return [j for j in automaton.jumps if j.source == mode]


def run_costs(automaton: Automaton) -> dict:
    """Fewest jumps needed to reach each mode from an initial mode."""
    cost = {m: INFINITE_COST for m in automaton.mode_names}
    queue = deque()
    for q, _ in automaton.init:
        if cost.get(q) != 0:
            cost[q] = 0
            queue.append(q)
    while queue:
        q = queue.popleft()
        for j in enabled_jumps(automaton, q):
            if j.target in cost and cost[j.target] > cost[q] + 1:
                cost[j.target] = cost[q] + 1
                queue.append(j.target)
    return cost


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Diagnostic:
    kind: str
    automaton: str | None
    locus: str
    detail: str = ""

    def __str__(self):
        where = f"{self.automaton}:{self.locus}" if self.automaton else self.locus
        return f"{self.kind}({where}){': ' + self.detail if self.detail else ''}"


def _vars_ok(formula, allowed: set) -> set:
    return free_vars(formula) - allowed


def validate(network: Network, goal: Goal | None = None) -> list:
    """Structural checks; an empty list means the model is well formed."""
    diags: list = []
    names = [a.name for a in network.automata]
    for n in sorted({n for n in names if names.count(n) > 1}):
        diags.append(Diagnostic("DuplicateAutomaton", n, "network"))
    all_vars = set(network.variables)
    if DURATION in all_vars:
        diags.append(Diagnostic("ReservedName", None, "variables", DURATION))
    for v, b in network.variables.items():
        if not (math.isfinite(b[0]) and math.isfinite(b[1])) or b[0] > b[1]:
            diags.append(Diagnostic("BadBounds", None, v))

    owners = network.owners()
    for v, os in owners.items():
        if len(os) > 1:
            diags.append(Diagnostic("MultipleFlowOwners", None, v,
                                    ",".join(network[i].name for i in os)))

    for a in network.automata:
        own = set(a.variables)
        modes = a.mode_names
        for m in sorted({m for m in modes if modes.count(m) > 1}):
            diags.append(Diagnostic("DuplicateMode", a.name, m))
        if not a.init:
            diags.append(Diagnostic("NoInit", a.name, "init"))
        for q, f in a.init:
            if q not in modes:
                diags.append(Diagnostic("UnknownMode", a.name, f"init {q}", q))
            for v in sorted(_vars_ok(f, own)):
                diags.append(Diagnostic("UnboundVariable", a.name, f"init {q}", v))
        for m in a.modes:
            for v in sorted(_vars_ok(m.invariant, own)):
                diags.append(Diagnostic("UnboundVariable", a.name, f"inv {m.name}", v))
            flow = m.flow
            if isinstance(flow, OdeFlow):
                targets = set(flow.rates)
                for v in sorted(targets - own):
                    diags.append(Diagnostic("UnboundVariable", a.name, f"flow {m.name}", v))
                for v, rhs in flow.rates.items():
                    for u in sorted(free_vars(rhs) - own):
                        diags.append(Diagnostic("UnboundVariable", a.name, f"flow {m.name}", u))
                    for u in sorted(free_vars(rhs) & own):
                        us = owners.get(u, [])
                        if us and network.automata[us[0]] is not a:
                            diags.append(Diagnostic("ForeignFlowRead", a.name,
                                                    f"flow {m.name}", u))
            elif isinstance(flow, ClosedFormFlow):
                allowed = {f"{v}@0" for v in own} | {f"{v}@t" for v in own} | {DURATION}
                for v in sorted(_vars_ok(flow.relation, allowed)):
                    diags.append(Diagnostic("UnboundVariable", a.name, f"flow {m.name}", v))
        for j in a.jumps:
            where = f"jump {j!r}"
            for q in (j.source, j.target):
                if q not in modes:
                    diags.append(Diagnostic("UnknownMode", a.name, where, q))
            for v in sorted(_vars_ok(j.guard, own)):
                diags.append(Diagnostic("UnboundVariable", a.name, where, v))
            allowed = own | {f"{v}'" for v in own}
            for v in sorted(_vars_ok(j.update, allowed)):
                diags.append(Diagnostic("UnboundVariable", a.name, where, v))

    if goal is not None:
        for aut, q in goal.modes.items():
            if aut not in names:
                diags.append(Diagnostic("UnknownAutomaton", None, "goal", aut))
            elif q not in network[names.index(aut)].mode_names:
                diags.append(Diagnostic("UnknownMode", aut, "goal", q))
        for v in sorted(free_vars(goal.predicate) - all_vars):
            diags.append(Diagnostic("UnboundVariable", None, "goal", v))
    return diags


def written_vars(jump: Jump) -> set:
    """Variables whose next-step start value the jump's update assigns."""
    return {n[:-1] for n in free_vars(jump.update) if n.endswith("'")}
