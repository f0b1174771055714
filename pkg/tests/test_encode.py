import random

import pytest
from hypothesis import given, settings, strategies as st

from hyra import expr as E
from hyra import modelio
from hyra.encode import (Atom, AuxVar, ExplicitFlow, InvariantObligation, ModeVar, OdeAtom, SyncVar,
                         UnknownKey, encode)

from enumeration import block_clause, project
from oracles import dpll, legal_runs, random_goal, random_network


def toy(k=1):
    doc = modelio.load_bundled("toy")
    return encode(doc.network, doc.goal, k, 10.0)


def test_toy_variable_layout():
    db = toy(1)
    modes = [v for v in db.bool_vars if isinstance(v, ModeVar)]
    syncs = [v for v in db.bool_vars if isinstance(v, SyncVar)]
    assert len(modes) == 8 and syncs == [SyncVar(0, "s")]
    # mode variables come first, in step / automaton / mode order
    assert db.bool_vars[:4] == [ModeVar(0, 0, "a0"), ModeVar(0, 0, "a1"), ModeVar(0, 1, "b0"), ModeVar(0, 1, "b1")]
    assert db.mode_literal(1, 1, "b1") == 8 and db.sync_literal(0, "s") == 9
    assert {nv.name for nv in db.num_vars} == {"x@0#0", "x@t#0", "t#0", "x@0#1", "x@t#1", "t#1"}
    assert tuple(db.bounds["t#1"]) == (0.0, 10.0)


def test_zero_steps_has_no_transitions():
    db = toy(0)
    assert not any(isinstance(v, SyncVar) for v in db.bool_vars)
    assert db.transition_clauses == {}
    # goal modes unreachable at step 0
    assert dpll(db.clauses, db.num_bool) is None


def test_transition_alternatives():
    db = toy(2)
    for i in range(2):
        per = dict(db.transition_clauses[i])
        assert len(per[0]) == 1 + 2 and len(per[1]) == 1 + 2


def test_unknown_keys():
    db = toy(1)
    with pytest.raises(UnknownKey):
        db.mode_literal(2, 0, "a0")
    with pytest.raises(UnknownKey):
        db.mode_literal(0, 0, "zz")
    with pytest.raises(UnknownKey):
        db.sync_literal(1, "s")


def test_encode_rejects_bad_arguments():
    doc = modelio.load_bundled("toy")
    with pytest.raises(ValueError):
        encode(doc.network, doc.goal, -1, 10.0)
    with pytest.raises(ValueError):
        encode(doc.network, doc.goal, 1, 0.0)


@pytest.mark.parametrize("name", ["toy", "dribble", "car_linear_1", "generator_linear_1"])
def test_encoding_is_deterministic(name):
    doc = modelio.load_bundled(name)
    a = encode(doc.network, doc.goal, 3, 10.0)
    b = encode(doc.network, doc.goal, 3, 10.0)
    assert a.dump() == b.dump()
    assert a.clauses == b.clauses and a.bool_vars == b.bool_vars


@pytest.mark.parametrize("name", ["dribble", "car_linear_2", "generator_linear_1"])
def test_atoms_touch_adjacent_steps_only(name):
    doc = modelio.load_bundled(name)
    db = encode(doc.network, doc.goal, 3, 10.0)
    for lit, atoms in db.attached.items():
        v = db.var(lit)
        for a in atoms:
            steps = set(a.steps)
            assert steps and max(steps) - min(steps) <= 1
            if isinstance(v, ModeVar):
                assert steps == {v.step}
            if isinstance(a, Atom):
                used = {int(n.split("#")[1]) for n in E.free_vars(a.constraint)}
                assert used <= steps
            assert isinstance(a, (Atom, OdeAtom, ExplicitFlow, InvariantObligation))


def test_dribble_has_ode_atoms_per_step():
    doc = modelio.load_bundled("dribble")
    db = encode(doc.network, doc.goal, 2, 10.0)
    odes = [a for atoms in db.attached.values() for a in atoms if isinstance(a, OdeAtom)]
    assert {a.step for a in odes} == {0, 1, 2}


def _skeleton_runs(db):
    """All discrete projections of models of the clause set, by blocking."""
    clauses = list(db.clauses)
    out = set()
    while True:
        m = dpll(clauses, db.num_bool)
        if m is None:
            return out
        r = project(db, [i if m.get(i, False) else -i for i in range(1, db.num_bool + 1)])
        out.add(r)
        clauses.append(block_clause(db, r))


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_skeleton_matches_brute_force(seed):
    rng = random.Random(seed)
    net = random_network(rng, max_automata=2, max_modes=3, max_jumps=3, n_labels=2)
    goal = random_goal(rng, net)
    k = rng.randint(0, 2)
    db = encode(net, goal, k, 10.0)
    assert _skeleton_runs(db) == legal_runs(net, k, goal)


def test_aux_vars_are_named():
    db = toy(1)
    kinds = {v.kind for v in db.bool_vars if isinstance(v, AuxVar)}
    assert {"init", "noop", "trans"} <= kinds
