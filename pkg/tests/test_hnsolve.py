import random

import pytest
from hypothesis import given, settings, strategies as st

from hyra import expr as E
from hyra import modelio
from hyra.encode import encode
from hyra.hnsolve import (Entry, SolverConfig, TrailView, conflict_from_trail, dfs, filter_successors,
                          gen_run, hnsolve)
from hyra.model import Automaton, Goal, Jump, Mode, Network, run_costs
from hyra.sat import DECISION, TrailEntry

from oracles import clock_run_feasible, legal_runs, random_goal, random_network

S = frozenset(["s"])


def toy_db(k=1):
    doc = modelio.load_bundled("toy")
    return doc, encode(doc.network, doc.goal, k, 10.0)


def costs_of(net):
    return [run_costs(a) for a in net.automata]


def test_toy_run_literals():
    doc, db = toy_db(1)
    lits = gen_run(doc.network, (), costs_of(doc.network), 1, db)
    m = db.mode_literal
    assert lits == [m(0, 0, "a0"), m(0, 1, "b0"), m(1, 0, "a1"), db.sync_literal(0, "s"), m(1, 1, "b1")]


def test_toy_stack():
    doc, db = toy_db(1)
    stack = dfs(doc.network, [], costs_of(doc.network), 1, TrailView(db))
    assert stack == [Entry(None, "a0"), Entry(None, "b0"), Entry("a0", "a1", S), Entry("b0", "b1", S)]


def test_no_initial_choice_gives_nil():
    doc, db = toy_db(1)
    trail = (TrailEntry(-db.mode_literal(0, 0, "a0"), DECISION, 1),)
    assert gen_run(doc.network, trail, costs_of(doc.network), 1, db) is None


def test_zero_steps_gives_initial_modes():
    doc, db = toy_db(0)
    assert gen_run(doc.network, (), costs_of(doc.network), 0, db) == [db.mode_literal(0, 0, "a0"),
                                                                      db.mode_literal(0, 1, "b0")]


def test_filtered_only_jump_fails():
    a = Automaton("A", {}, (Mode("a0"), Mode("a1")), (Jump("a0", "a1", S),), (("a0", E.TRUE),), S)
    net = Network((a,))
    db = encode(net, Goal({"A": "a1"}), 1, 1.0)
    trail = (TrailEntry(-db.mode_literal(1, 0, "a1"), DECISION, 1),)
    # a lone automaton cannot noop: every step needs a label
    assert gen_run(net, trail, costs_of(net), 1, db) is None


def test_cheaper_target_first():
    # q1 and q2 cost 1, q3 costs 2; from q1 the q3 jump is declared first
    jumps = (Jump("q1", "q3", S), Jump("q1", "q2", S), Jump("q0", "q1", S), Jump("q0", "q2", S),
             Jump("q2", "q3", S))
    a = Automaton("A", {}, tuple(Mode(f"q{i}") for i in range(4)), jumps, (("q0", E.TRUE),), S)
    net = Network((a,))
    assert run_costs(a) == {"q0": 0, "q1": 1, "q2": 1, "q3": 2}
    db = encode(net, Goal(), 2, 1.0)
    stack = dfs(net, [], costs_of(net), 2, TrailView(db))
    assert [e.target for e in stack] == ["q0", "q1", "q2"]


def _net3(shared=("A", "B", "C")):
    auts = []
    for name in ("A", "B", "C"):
        auts.append(Automaton(name, {}, (Mode("p"), Mode("r")), (Jump("p", "r", S),), (("p", E.TRUE),),
                              S if name in shared else frozenset(["t"])))
    return Network(tuple(auts))


def test_filter_jump_against_noop_sibling():
    net = _net3(("A", "B"))
    db = encode(net, Goal(), 1, 1.0)
    init = [Entry(None, "p")] * 3
    stack = init + [Entry("p", "p", noop=True)]
    cand = [Entry("p", "r", S)]
    assert filter_successors(cand, 1, net, stack, 1, TrailView(db)) == []


def test_filter_keeps_agreeing_jump():
    net = _net3(("A", "B"))
    db = encode(net, Goal(), 1, 1.0)
    stack = [Entry(None, "p")] * 3 + [Entry("p", "r", S)]
    cand = [Entry("p", "r", S)]
    assert filter_successors(cand, 1, net, stack, 1, TrailView(db)) == cand


def test_filter_noop_against_two_jumping_siblings():
    net = _net3()
    db = encode(net, Goal(), 1, 1.0)
    stack = [Entry(None, "p")] * 3 + [Entry("p", "r", S), Entry("p", "r", S)]
    cand = [Entry("p", "p", noop=True)]
    assert filter_successors(cand, 2, net, stack, 1, TrailView(db)) == []
    # brute force agrees: C cannot stay in p while s fires
    vecs = {run[0][1] for run in legal_runs(net, 1)}
    assert ("r", "r", "p") not in vecs and ("r", "r", "r") in vecs


def test_conflict_clauses():
    d = lambda l: TrailEntry(l, DECISION, 1)
    assert conflict_from_trail([d(3), TrailEntry(4, "implied", 1), d(-5)]) == [-3, 5]
    assert conflict_from_trail([d(7)]) == [-7]
    assert conflict_from_trail([TrailEntry(2, "premise", 0)]) is None


# ---------------------------------------------------------------- whole solver

def test_toy_is_delta_sat():
    doc = modelio.load_bundled("toy")
    r = hnsolve(doc.network, doc.goal, SolverConfig(k=1))
    assert r.verdict == "delta-sat"
    assert r.run.labels == [S]
    assert [s.modes for s in r.run.states] == [("a0", "b0"), ("a1", "b1")]


def test_toy_without_b_jump_is_unsat():
    text = modelio.bundled_text("toy").replace("(jump b0 b1 (labels s))", "")
    doc = modelio.parse_model(text)
    for g in ("plain", "heuristic", "heuristic-learn"):
        r = hnsolve(doc.network, doc.goal, SolverConfig(guidance=g, k=1))
        assert r.verdict == "unsat"
        # one initial choice per automaton
        assert len(r.learned_clauses) <= 1


def test_bad_config():
    with pytest.raises(ValueError):
        SolverConfig(guidance="fast")
    with pytest.raises(ValueError):
        SolverConfig(k=-1)


def test_timeout_reports_unknown():
    doc = modelio.load_bundled("dribble")
    r = hnsolve(doc.network, doc.goal, SolverConfig(k=8, timeout=0.5))
    assert r.verdict == "unknown" and r.reason
    assert r.stats.seconds >= 0.5


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_guidance_modes_agree(seed):
    rng = random.Random(seed)
    net = random_network(rng, max_automata=2, max_modes=3, max_jumps=3, n_labels=2, clocks=True)
    goal = random_goal(rng, net)
    k = rng.randint(1, 3)
    expected = "delta-sat" if legal_runs(net, k, goal) else "unsat"
    for g in ("plain", "heuristic", "heuristic-learn"):
        assert hnsolve(net, goal, SolverConfig(guidance=g, k=k, max_delay=5.0)).verdict == expected


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_capped_clocks_match_linear_programming(seed):
    rng = random.Random(seed)
    net = random_network(rng, max_automata=2, max_modes=3, max_jumps=3, n_labels=2, clocks=True, caps=0.4)
    goal = random_goal(rng, net)
    k = rng.randint(1, 3)
    feasible = any(clock_run_feasible(net, r, 5.0) for r in legal_runs(net, k, goal))
    r = hnsolve(net, goal, SolverConfig(k=k, max_delay=5.0))
    assert r.verdict == ("delta-sat" if feasible else "unsat")
