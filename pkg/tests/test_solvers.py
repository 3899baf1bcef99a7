from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interpriv.analysis import erasure_source
from interpriv.dist import Alphabet, JointPmf
from interpriv.info import entropy, mutual_information
from interpriv.mechanism import InteractionBudget, evaluate, induce_joint
from interpriv.solvers import (InfeasibleError, SearchSpaceError, algorithm1, grid_oracle,
                               interaction_curve, merge_and_search, merge_core, simplex_grid)

from _util import random_binary_source, random_source


def three_way(P):
    P = np.asarray(P, float)
    P = P / P.sum()
    names = (("X", Alphabet.range(P.shape[0])), ("Y", Alphabet.range(P.shape[1])),
             ("Z", Alphabet.range(P.shape[2])))
    return JointPmf(names, P)


def info_xyz(P, partition):
    """(I(Y; U, Z), I(X; U, Z)) for a clustering of X, computed via the info module."""
    W = np.zeros((P.shape[0], len(partition)))
    for u, members in enumerate(partition):
        W[list(members), u] = 1
    J = np.einsum("xyz,xu->xyzu", P, W)
    pmf = JointPmf(tuple((n, Alphabet.range(s)) for n, s in zip("XYZU", J.shape)), J)
    return mutual_information(pmf, "Y", ("U", "Z")), mutual_information(pmf, "X", ("U", "Z"))


@pytest.mark.parametrize("dim,steps", [(2, 16), (3, 8), (4, 4)])
def test_simplex_grid(dim, steps):
    g = simplex_grid(dim, steps)
    assert len(g) == comb(steps + dim - 1, dim - 1)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    assert len(np.unique(g, axis=0)) == len(g)


def test_oracle_trivial_floor():
    src = random_binary_source(np.random.default_rng(0))
    res = grid_oracle(src, 1, [2], InteractionBudget(taus=(0.0, 0.0)))
    floor = mutual_information(src, "Y1", "X2") + mutual_information(src, "Y2", "X1")
    assert res.objective == pytest.approx(floor, abs=1e-12)


def test_oracle_forced_identity():
    src = random_binary_source(np.random.default_rng(1))
    b = InteractionBudget.log_loss(src, 0.0, float("inf"))
    res = grid_oracle(src, 1, [2], b)
    want = mutual_information(src, "Y1", ("X1", "X2")) + mutual_information(src, "Y2", "X1")
    assert res.objective == pytest.approx(want, abs=1e-9)
    assert res.point.D1 < 1e-9


def test_oracle_point_is_reevaluated_and_deterministic():
    src = random_binary_source(np.random.default_rng(2))
    b = InteractionBudget.log_loss(src, 0.5, float("inf"))
    r1 = grid_oracle(src, 1, [3], b)
    r2 = grid_oracle(src, 1, [3], b)
    assert r1.objective == r2.objective
    np.testing.assert_array_equal(r1.schedule.rounds[0].rows, r2.schedule.rounds[0].rows)
    assert evaluate(src, r1.schedule) == r1.point
    assert r1.point.D1 <= 0.5 + 1e-9


def test_oracle_errors():
    src = random_binary_source(np.random.default_rng(3))
    with pytest.raises(InfeasibleError):
        grid_oracle(src, 0, [], InteractionBudget.log_loss(src, 0.0, 0.0))
    with pytest.raises(SearchSpaceError):
        grid_oracle(src, 2, [2, 2], InteractionBudget(taus=(0, 0)), resolution=1 / 16, cap=10_000)
    with pytest.raises(ValueError):
        grid_oracle(src, 2, [2], InteractionBudget(taus=(0, 0)))


def test_oracle_table_distortion():
    from interpriv.dist import DistortionFn
    src = erasure_source(0.1)
    b = InteractionBudget(caps=(0.5, float("inf")), dfns=(DistortionFn.erasure(), None))
    res = grid_oracle(src, 1, [3], b, resolution=1 / 8, refine=1)
    assert res.point.D1 <= 0.5 + 1e-9
    full = evaluate(src, res.schedule, b.dfns)
    assert full == res.point


def test_merge_extremes():
    rng = np.random.default_rng(4)
    P = rng.dirichlet(np.ones(16)).reshape(4, 2, 2)
    src = three_way(P)
    r0 = merge_and_search(src, 0.0)
    assert r0.partition == ((0, 1, 2, 3),)
    assert r0.objective == pytest.approx(mutual_information(src, "Y", "Z"), abs=1e-12)
    top = mutual_information(src, "X", ("X",)) if False else entropy(src, "X")
    r1 = merge_and_search(src, top)
    assert r1.partition == ((0,), (1,), (2,), (3,))
    with pytest.raises(InfeasibleError):
        merge_and_search(src, top + 1e-6)


def test_merge_channel_is_deterministic_partition():
    P = np.random.default_rng(5).dirichlet(np.ones(24)).reshape(6, 2, 2)
    r = merge_and_search(three_way(P), 0.8)
    assert set(np.unique(r.channel)) <= {0.0, 1.0}
    np.testing.assert_allclose(r.channel.sum(axis=1), 1.0)
    assert sorted(i for c in r.partition for i in c) == list(range(6))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.floats(0.0, 1.0))
def test_merge_trace_safe_and_monotone(seed, nx, frac):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.full(nx * 4, 0.7)).reshape(nx, 2, 2)
    src = three_way(P)
    tau = frac * entropy(src, "X")
    r = merge_core(src.table, tau)
    prev = None
    for step in r.trace:
        assert step["utility_after"] >= tau - 1e-12
        assert step["objective_after"] <= step["objective_before"] + 1e-12
        if prev is not None:
            assert step["objective_before"] == pytest.approx(prev, abs=1e-12)
        prev = step["objective_after"]
    obj, util = info_xyz(src.table, r.partition)
    assert obj == pytest.approx(r.objective, abs=1e-10)
    assert util >= tau - 1e-10


def test_merge_composite_inputs():
    rng = np.random.default_rng(6)
    src = random_binary_source(rng)
    a = merge_and_search(src, 0.3, x=("X1",), y="Y1", z=("X2",))
    b = merge_and_search(src, 0.3, x="X1", y=("Y1",), z="X2")
    assert a.partition == b.partition


def test_algorithm1_k1_is_merge_and_search():
    rng = np.random.default_rng(7)
    src = random_source(rng, (4, 2, 3, 2))
    t = 0.4
    res = algorithm1(src, 1, [t], "A")
    base = mutual_information(src, "X1", "X2")
    m = merge_and_search(src, base + t, x="X1", y="Y1", z="X2")
    assert res.trace[0]["clusters"] == m.partition
    assert res.point.L1 == pytest.approx(m.objective, abs=1e-10)


def test_algorithm1_zero_taus_give_floor():
    rng = np.random.default_rng(8)
    src = random_source(rng, (3, 2, 3, 2))
    res = algorithm1(src, 3, [0.0, 0.0, 0.0], "B")
    floor = mutual_information(src, "Y1", "X2") + mutual_information(src, "Y2", "X1")
    assert res.objective == pytest.approx(floor, abs=1e-12)


def test_algorithm1_round_constraints_hold():
    rng = np.random.default_rng(9)
    src = random_source(rng, (4, 2, 4, 2))
    taus = [0.3, 0.2, 0.1]
    res = algorithm1(src, 3, taus, "A")
    j = induce_joint(src, res.schedule)
    for k, tau in enumerate(taus, start=1):
        s = res.schedule.speaker(k)
        x, far = ("X1", "X2") if s == "A" else ("X2", "X1")
        given_ = (far,) + tuple(f"U{i}" for i in range(1, k))
        assert mutual_information(j, x, f"U{k}", given_) >= tau - 1e-10


def test_algorithm1_reports_failing_round():
    src = random_source(np.random.default_rng(10), (3, 2, 3, 2))
    with pytest.raises(InfeasibleError) as e:
        algorithm1(src, 2, [0.1, 50.0], "A")
    assert e.value.round_index == 2


def test_oracle_dominates_algorithm1_binary():
    rng = np.random.default_rng(11)
    for _ in range(5):
        src = random_binary_source(rng)
        t = 0.5 * (entropy(src, ("X1", "X2")) - entropy(src, "X2"))
        greedy = algorithm1(src, 1, [t], "A")
        need = mutual_information(src, "X1", "X2") + t
        oracle = grid_oracle(src, 1, [2], InteractionBudget(taus=(need, 0.0)))
        assert oracle.objective <= greedy.objective + 2 / 16


def test_two_round_curve_not_above_one_round():
    src = erasure_source(0.03, 0.23)
    us = np.linspace(mutual_information(src, "X1", "X2"), 1.0, 5)
    one = interaction_curve(src, us, 1)
    two = interaction_curve(src, us, 2)
    for a, b in zip(one, two):
        assert b.leakage <= a.leakage + 1e-9
    over = interaction_curve(src, [1.5], 1)[0]
    assert not over.feasible and over.leakage == np.inf


def test_oracle_default_mesh_coarsens_to_cap():
    src = random_binary_source(np.random.default_rng(12))
    res = grid_oracle(src, 2, [2, 2], InteractionBudget(taus=(0.0, 0.0)), cap=10_000)
    assert max(res.resolution) > 1 / 16
    assert grid_oracle(src, 1, [2], InteractionBudget(taus=(0, 0))).resolution == (1 / 16,)
