"""Reading and writing ``.hna`` network models and ``.run`` witnesses.

A model file holds three top-level forms::

    (network <name> (automaton ...) ...)
    (goal (modes (<automaton> <mode>) ...) (pred <formula>))
    (defaults (k <int>) (max-delay <real>) (delta <real>))

Automata are written as::

    (automaton <name>
      (vars (<var> <lo> <hi>) ...)
      (alphabet <label> ...)
      (mode <name> (flow (ode (d/dt <var> <term>) ...)) (inv <formula>))
      (mode <name> (flow (closed-form <formula>)))
      (jump <from> <to> (labels ...) (guard <formula>) (update <formula>))
      (init <mode> <formula>))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import expr as E
from .interval import Interval
from .model import (Automaton, ClosedFormFlow, CompositeRun, Goal, Jump, Mode,
                    Network, OdeFlow, RunState, validate)
from .sexpr import Atom, ModelSyntaxError, SList, fail, read_all


class SemanticError(ValueError):
    def __init__(self, diagnostics: list):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass
class ModelDocument:
    network: Network
    goal: Goal
    k: int = 1
    max_delay: float = 10.0
    delta: float = 0.1
    name: str = "network"

    def __post_init__(self):
        if self.k < 0 or not self.max_delay > 0 or not self.delta > 0:
            raise ValueError("need k >= 0, max-delay > 0 and delta > 0")


# ---------------------------------------------------------------- terms

_OPS = {"+": "+", "-": "-", "*": "*", "/": "/", "min": "min", "max": "max",
        "sin": "sin", "cos": "cos", "exp": "exp", "sqrt": "sqrt"}


def _number(atom: Atom):
    try:
        v = float(atom.text)
    except ValueError:
        return None
    if not math.isfinite(v):
        return None
    return v


def parse_term(node) -> E.Term:
    if isinstance(node, Atom):
        v = _number(node)
        if v is not None:
            return E.Const(v)
        return E.Var(node.text)
    if not node:
        fail(node, "empty term")
    op = node.head
    args = node[1:]
    if op == "^":
        if len(args) != 2 or not isinstance(args[1], Atom):
            fail(node, "(^ base n) expects an integer exponent")
        try:
            n = int(args[1].text)
        except ValueError:
            fail(args[1], "pow exponent must be an integer")
        if n < 0:
            fail(args[1], "pow exponent must be non-negative")
        return E.Pow(parse_term(args[0]), n)
    if op not in _OPS:
        fail(node, f"unknown function {op!r}")
    ts = [parse_term(a) for a in args]
    if op in ("+", "*"):
        if not ts:
            fail(node, f"({op}) needs arguments")
        acc = ts[0]
        for t in ts[1:]:
            acc = E.App(op, (acc, t))
        return acc
    if op == "-":
        if len(ts) == 1:
            return E.App("neg", (ts[0],))
        if len(ts) != 2:
            fail(node, "(-) takes one or two arguments")
        return E.App("-", tuple(ts))
    want = 1 if op in E.UNARY else 2
    if len(ts) != want:
        fail(node, f"{op} takes {want} argument(s)")
    return E.App(op, tuple(ts))


def parse_formula(node) -> E.Formula:
    if isinstance(node, Atom):
        if node.text == "true":
            return E.TRUE
        fail(node, f"expected a formula, got {node.text!r}")
    op = node.head
    if op == "and":
        return E.And(tuple(parse_formula(p) for p in node[1:]))
    if op == "or":
        return E.Or(tuple(parse_formula(p) for p in node[1:]))
    if op in E.RELATIONS:
        if len(node) != 3:
            fail(node, f"({op} a b) takes two terms")
        return E.Constraint(parse_term(node[1]), op, parse_term(node[2]))
    fail(node, f"unknown formula operator {op!r}")


# ---------------------------------------------------------------- model

def _sym(node, what: str) -> str:
    if not isinstance(node, Atom):
        fail(node, f"expected {what}")
    return node.text


def _num(node, what: str) -> float:
    if not isinstance(node, Atom) or _number(node) is None:
        fail(node, f"expected a number for {what}")
    return _number(node)


def _section(node, name: str) -> SList:
    if not isinstance(node, SList) or node.head is None:
        fail(node, f"expected a ({name} ...) section")
    return node


def _parse_flow(node):
    if len(node) != 2 or not isinstance(node[1], SList):
        fail(node, "(flow (ode ...)) or (flow (closed-form ...))")
    body = node[1]
    if body.head == "ode":
        rates = {}
        for d in body[1:]:
            if not isinstance(d, SList) or d.head != "d/dt" or len(d) != 3:
                fail(d, "expected (d/dt <var> <term>)")
            rates[_sym(d[1], "variable")] = parse_term(d[2])
        return OdeFlow(rates)
    if body.head == "closed-form":
        if len(body) != 2:
            fail(body, "(closed-form <formula>)")
        return ClosedFormFlow(parse_formula(body[1]))
    fail(body, f"unknown flow kind {body.head!r}")


def _parse_automaton(node) -> Automaton:
    if len(node) < 2:
        fail(node, "automaton needs a name")
    name = _sym(node[1], "automaton name")
    variables, modes, jumps, init = {}, [], [], []
    alphabet: set = set()
    for part in node[2:]:
        part = _section(part, "automaton")
        kw = part.head
        if kw == "vars":
            for v in part[1:]:
                if not isinstance(v, SList) or len(v) != 3:
                    fail(v, "expected (<var> <lo> <hi>)")
                variables[_sym(v[0], "variable")] = Interval(_num(v[1], "bound"), _num(v[2], "bound"))
        elif kw == "alphabet":
            alphabet |= {_sym(a, "label") for a in part[1:]}
        elif kw == "mode":
            if len(part) < 2:
                fail(part, "mode needs a name")
            flow, inv = None, E.TRUE
            for sub in part[2:]:
                sub = _section(sub, "mode")
                if sub.head == "flow":
                    flow = _parse_flow(sub)
                elif sub.head == "inv":
                    inv = _one_formula(sub)
                else:
                    fail(sub, f"unknown mode section {sub.head!r}")
            modes.append(Mode(_sym(part[1], "mode name"), flow, inv))
        elif kw == "jump":
            if len(part) < 3:
                fail(part, "(jump <from> <to> ...)")
            labels, guard, update = frozenset(), E.TRUE, E.TRUE
            for sub in part[3:]:
                sub = _section(sub, "jump")
                if sub.head == "labels":
                    labels = frozenset(_sym(a, "label") for a in sub[1:])
                elif sub.head == "guard":
                    guard = _one_formula(sub)
                elif sub.head == "update":
                    update = _one_formula(sub)
                else:
                    fail(sub, f"unknown jump section {sub.head!r}")
            jumps.append(Jump(_sym(part[1], "mode"), _sym(part[2], "mode"), labels, guard, update))
        elif kw == "init":
            if len(part) not in (2, 3):
                fail(part, "(init <mode> [formula])")
            f = parse_formula(part[2]) if len(part) == 3 else E.TRUE
            init.append((_sym(part[1], "mode"), f))
        else:
            fail(part, f"unknown automaton section {kw!r}")
    return Automaton(name, variables, tuple(modes), tuple(jumps), tuple(init), frozenset(alphabet))


def _one_formula(sub):
    if len(sub) != 2:
        fail(sub, f"({sub.head} <formula>)")
    return parse_formula(sub[1])


def parse_model(text: str) -> ModelDocument:
    forms = read_all(text)
    network = goal = None
    name = "network"
    defaults = {"k": 1, "max-delay": 10.0, "delta": 0.1}
    for form in forms:
        form = _section(form, "top-level")
        kw = form.head
        if kw == "network":
            rest = form[1:]
            if rest and isinstance(rest[0], Atom):
                name = rest[0].text
                rest = rest[1:]
            autos = []
            for a in rest:
                a = _section(a, "automaton")
                if a.head != "automaton":
                    fail(a, f"unknown network section {a.head!r}")
                autos.append(_parse_automaton(a))
            network = Network(tuple(autos))
        elif kw == "goal":
            modes, pred = {}, E.TRUE
            for sub in form[1:]:
                sub = _section(sub, "goal")
                if sub.head == "modes":
                    for pair in sub[1:]:
                        if not isinstance(pair, SList) or len(pair) != 2:
                            fail(pair, "expected (<automaton> <mode>)")
                        modes[_sym(pair[0], "automaton")] = _sym(pair[1], "mode")
                elif sub.head == "pred":
                    pred = _one_formula(sub)
                else:
                    fail(sub, f"unknown goal section {sub.head!r}")
            goal = Goal(modes, pred)
        elif kw == "defaults":
            for sub in form[1:]:
                sub = _section(sub, "defaults")
                if sub.head not in defaults or len(sub) != 2:
                    fail(sub, f"unknown default {sub.head!r}")
                defaults[sub.head] = _num(sub[1], sub.head)
        else:
            fail(form, f"unknown section keyword {kw!r}")
    if network is None:
        raise ModelSyntaxError(1, 1, "missing (network ...) form")
    goal = goal or Goal()
    diags = validate(network, goal)
    if diags:
        raise SemanticError(diags)
    k = defaults["k"]
    if k != int(k):
        raise ModelSyntaxError(1, 1, "k must be an integer")
    return ModelDocument(network, goal, int(k), float(defaults["max-delay"]),
                         float(defaults["delta"]), name)


def load_model(path) -> ModelDocument:
    return parse_model(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- bundled models

def bundled_models() -> list:
    root = resources.files("hyra") / "models"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".hna"))


def bundled_text(name: str) -> str:
    if not name.endswith(".hna"):
        name += ".hna"
    return (resources.files("hyra") / "models" / name).read_text(encoding="utf-8")


def load_bundled(name: str) -> ModelDocument:
    return parse_model(bundled_text(name))


def resolve_model(path: str) -> str:
    """Text of a model given a filesystem path or a bundled model name."""
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    if p.name in bundled_models() or p.name + ".hna" in bundled_models():
        return bundled_text(p.name)
    raise FileNotFoundError(path)


# ---------------------------------------------------------------- writing

_S = E.to_sexpr


def _num_text(x: float) -> str:
    return E._num(x)


def serialize_model(doc: ModelDocument) -> str:
    out = [f"(network {doc.name}"]
    for a in doc.network.automata:
        out.append(f"  (automaton {a.name}")
        if a.variables:
            vs = " ".join(f"({v} {_num_text(b[0])} {_num_text(b[1])})" for v, b in a.variables.items())
            out.append(f"    (vars {vs})")
        if a.alphabet:
            out.append(f"    (alphabet {' '.join(sorted(a.alphabet))})")
        for m in a.modes:
            parts = [f"(mode {m.name}"]
            if isinstance(m.flow, OdeFlow):
                rates = " ".join(f"(d/dt {v} {_S(t)})" for v, t in m.flow.rates.items())
                parts.append(f" (flow (ode {rates}))")
            elif isinstance(m.flow, ClosedFormFlow):
                parts.append(f" (flow (closed-form {_S(m.flow.relation)}))")
            if m.invariant != E.TRUE:
                parts.append(f" (inv {_S(m.invariant)})")
            out.append("    " + "".join(parts) + ")")
        for j in a.jumps:
            parts = [f"(jump {j.source} {j.target}"]
            if j.labels:
                parts.append(f" (labels {' '.join(sorted(j.labels))})")
            if j.guard != E.TRUE:
                parts.append(f" (guard {_S(j.guard)})")
            if j.update != E.TRUE:
                parts.append(f" (update {_S(j.update)})")
            out.append("    " + "".join(parts) + ")")
        for q, f in a.init:
            out.append(f"    (init {q} {_S(f)})" if f != E.TRUE else f"    (init {q})")
        out[-1] += ")"
    out[-1] += ")"
    g = doc.goal
    gparts = ["(goal"]
    if g.modes:
        gparts.append(" (modes " + " ".join(f"({a} {q})" for a, q in g.modes.items()) + ")")
    if g.predicate != E.TRUE:
        gparts.append(f" (pred {_S(g.predicate)})")
    out.append("".join(gparts) + ")")
    out.append(f"(defaults (k {doc.k}) (max-delay {_num_text(doc.max_delay)}) "
               f"(delta {_num_text(doc.delta)}))")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- witnesses

def serialize_witness(run: CompositeRun, names: list | None = None) -> str:
    """Write a run as an s-expression; bounds are printed exactly (repr)."""
    out = ["(run"]
    for i, s in enumerate(run.states):
        out.append(f"  (state {i}")
        out.append(f"    (duration {s.duration[0]!r} {s.duration[1]!r})")
        if names is not None:
            mv = " ".join(f"({a} {q})" for a, q in zip(names, s.modes))
        else:
            mv = " ".join(s.modes)
        out.append(f"    (modes {mv})")
        for role, vals in (("start", s.start), ("end", s.end)):
            body = " ".join(f"({v} {b[0]!r} {b[1]!r})" for v, b in vals.items())
            out.append(f"    ({role} {body})")
        out[-1] += ")"
        if i < len(run.labels):
            out.append(f"  (labels {i} {' '.join(sorted(run.labels[i]))})")
    out[-1] += ")"
    return "\n".join(out) + "\n"


def parse_witness(text: str) -> CompositeRun:
    forms = read_all(text)
    if len(forms) != 1 or not isinstance(forms[0], SList) or forms[0].head != "run":
        raise ModelSyntaxError(1, 1, "expected a single (run ...) form")
    states, labels = [], []
    for part in forms[0][1:]:
        part = _section(part, "run")
        if part.head == "state":
            dur, modes, start, end = None, (), {}, {}
            for sub in part[2:]:
                sub = _section(sub, "state")
                if sub.head == "duration":
                    dur = Interval(_num(sub[1], "duration"), _num(sub[2], "duration"))
                elif sub.head == "modes":
                    modes = tuple(m[1].text if isinstance(m, SList) else m.text for m in sub[1:])
                elif sub.head in ("start", "end"):
                    d = start if sub.head == "start" else end
                    for v in sub[1:]:
                        d[_sym(v[0], "variable")] = Interval(_num(v[1], "bound"), _num(v[2], "bound"))
                else:
                    fail(sub, f"unknown state section {sub.head!r}")
            if dur is None:
                fail(part, "state without duration")
            states.append(RunState(dur, modes, start, end))
        elif part.head == "labels":
            labels.append(frozenset(a.text for a in part[2:]))
        else:
            fail(part, f"unknown run section {part.head!r}")
    return CompositeRun(states, labels)
