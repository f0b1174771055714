import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from hyra import expr as E
from hyra import icp
from hyra.icp import Box, DeltaSat, Empty, NothingToBranch, Unsat, branch, delta_check, prune

from oracles import bisect_root, random_prune_case

x, y = E.Var("x"), E.Var("y")


def width(b, n):
    return b[n].hi - b[n].lo


def test_contradictory_bounds_are_empty():
    c1, c2 = x >= 5, x <= 3
    r = prune({"x": (0, 10)}, [c1, c2])
    assert isinstance(r, Empty) and r.explanation == {c1, c2}


def test_lower_bound_prunes():
    r = prune({"x": (0, 10)}, [x >= 2])
    assert (r["x"].lo, r["x"].hi) == pytest.approx((2, 10))


def test_square_bound_prunes():
    r = prune({"x": (-10, 10)}, [x * x <= 4, x >= 0])
    assert r["x"].lo <= 0 and r["x"].hi >= 2
    assert width(r, "x") <= 2 + 0.05


def test_prune_keeps_source_labels():
    c = x >= 20
    r = prune({"x": (0, 10)}, [("lit7", c)])
    assert r.explanation == {"lit7"}


def test_branch_widest_first():
    a, b, i = branch(Box.from_dict({"x": (0, 4), "y": (0, 1)}))
    assert a.names[i] == "x" and a["x"].hi == 2 and b["x"].lo == 2
    assert (a["y"].lo, a["y"].hi) == (0, 1)


def test_branch_tie_goes_to_first_name():
    a, _, i = branch(Box.from_dict({"y": (0, 1), "x": (0, 1)}))
    assert a.names[i] == "x"


def test_branch_below_threshold():
    with pytest.raises(NothingToBranch):
        branch(Box.from_dict({"x": (0, 0.001)}), threshold=0.01)


def test_sqrt_two():
    root = bisect_root(lambda v: v * v - 2, 0, 2)
    r = delta_check([E.Constraint(x * x, "=", E.Const(2))], {"x": (0, 2)}, 0.01)
    assert isinstance(r, DeltaSat)
    assert abs(r.box["x"].lo - root) <= 0.01 and abs(r.box["x"].hi - root) <= 0.01
    assert width(r.box, "x") <= 0.01


def test_unsat_explains_both():
    c1, c2 = x >= 1, x <= 0
    r = delta_check([c1, c2], {"x": (-5, 5)}, 0.001)
    assert isinstance(r, Unsat) and r.explanation == {c1, c2}


def test_no_constraints_returns_input_box():
    r = delta_check([], {"x": (0, 1)}, 0.1)
    assert isinstance(r, DeltaSat) and r.box.as_dict() == {"x": (0, 1)}


def test_delta_must_be_positive():
    with pytest.raises(ValueError):
        delta_check([], {"x": (0, 1)}, 0.0)


def test_box_budget():
    circle = E.Constraint(x * x + y * y, "=", E.Const(1))
    with pytest.raises(icp.ResourceLimit):
        delta_check([circle, E.Constraint(x, "=", y + 1e-7)], {"x": (-2, 2), "y": (-2, 2)}, 1e-9,
                    max_boxes=5)


def test_delta_sat_box_meets_every_constraint():
    cs = [E.Constraint(x * y, "=", E.Const(1)), x + y <= 3, x >= 0.2]
    r = delta_check(cs, {"x": (0, 5), "y": (0, 5)}, 0.01)
    assert isinstance(r, DeltaSat)
    for c in cs:
        assert E.delta_holds_on_box(c, r.box.as_dict(), 0.01)


# ---------------------------------------------------------------- properties

@settings(max_examples=200)
@given(st.integers(0, 10 ** 9))
def test_prune_never_loses_feasible_points(seed):
    box, cs, feasible = random_prune_case(random.Random(seed))
    r = prune(box, cs)
    if isinstance(r, Empty):
        assert not feasible
        return
    for p in feasible:
        for n, v in p.items():
            assert r[n].lo <= v <= r[n].hi


def _small_case(seed):
    rng = random.Random(seed)
    box, cs, feasible = random_prune_case(rng, n_vars=2, n_constraints=2, n_samples=100)
    return box, cs[:-1] if rng.random() < 0.5 else cs, feasible


@settings(max_examples=60)
@given(st.integers(0, 10 ** 9))
def test_unsat_only_without_feasible_samples(seed):
    box, cs, _ = _small_case(seed)
    rng = random.Random(seed + 1)
    pts = [{n: rng.uniform(*box[n]) for n in box} for _ in range(300)]
    try:
        r = delta_check(cs, box, 0.05, max_boxes=3000)
    except icp.ResourceLimit:
        return
    if isinstance(r, Unsat):
        assert not any(all(E.holds(c, p) for c in cs) for p in pts)


@settings(max_examples=40)
@given(st.integers(0, 10 ** 9), st.sampled_from([0.5, 0.1]), st.sampled_from([0.05, 0.01]))
def test_smaller_delta_keeps_unsat(seed, d1, d2):
    box, cs, _ = _small_case(seed)
    try:
        r1 = delta_check(cs, box, d1, max_boxes=3000)
        if not isinstance(r1, Unsat):
            return
        r2 = delta_check(cs, box, d2, max_boxes=3000)
    except icp.ResourceLimit:
        return
    assert isinstance(r2, Unsat)
