import numpy as np
import pytest

from interpriv.dist import BINARY, Alphabet, Channel, DistortionFn, bsc
from interpriv.info import conditional_entropy, mutual_information
from interpriv.mechanism import (InteractionBudget, MechanismSchedule, ScheduleError,
                                 bayes_reconstruction, cardinality_cap, composition_check,
                                 distortion, evaluate, expected_distortion, induce_joint, leakage,
                                 lift, log_loss_distortion, pad_round, per_round_leakage,
                                 posterior_channel, round_scope, speaker, sum_leakage)

from _util import random_binary_source, random_schedule


def test_speakers_alternate():
    assert [speaker("A", k) for k in range(1, 5)] == ["A", "B", "A", "B"]
    assert round_scope("B", 3) == ("X2", "U1", "U2")


def test_schedule_rejects_wrong_scope_and_name():
    with pytest.raises(ScheduleError):
        MechanismSchedule("A", (bsc("X2", "U1", 0.1),))
    with pytest.raises(ScheduleError):
        MechanismSchedule("A", (bsc("X1", "U2", 0.1),))
    with pytest.raises(ScheduleError):
        MechanismSchedule("A", (Channel(("X1", "Y1"), ("U1", BINARY), np.full((2, 2, 2), 0.5)),))
    with pytest.raises(ValueError):
        MechanismSchedule("C", ())


def test_cardinality_cap_enforced():
    src = random_binary_source(np.random.default_rng(0))
    wide = Channel(("X1",), ("U1", Alphabet.range(4)), np.full((2, 4), 0.25))
    sched = MechanismSchedule("A", (wide,))
    assert cardinality_cap(src, sched, 1) == 3
    with pytest.raises(ScheduleError):
        induce_joint(src, sched)


def test_leakage_definitions():
    rng = np.random.default_rng(1)
    src = random_binary_source(rng)
    j = induce_joint(src, random_schedule(rng, src, 3))
    assert leakage(j, "A") == pytest.approx(mutual_information(j, "Y1", ("U1", "U2", "U3", "X2")))
    assert leakage(j, "B") == pytest.approx(mutual_information(j, "Y2", ("U1", "U2", "U3", "X1")))
    assert sum_leakage(j) == pytest.approx(leakage(j, "A") + leakage(j, "B"))
    assert per_round_leakage(j, 2, "A") == pytest.approx(0.0, abs=1e-12)   # B speaks round 2


@pytest.mark.parametrize("init", ["A", "B"])
def test_structural_markov(init):
    rng = np.random.default_rng(2)
    src = random_binary_source(rng)
    sched = random_schedule(rng, src, 4, init)
    j = induce_joint(src, sched)
    for k, ch in enumerate(sched.rounds, start=1):
        rest = tuple(n for n in ("X1", "Y1", "X2", "Y2") if n not in ch.scope)
        assert mutual_information(j, rest, ch.name, given=ch.scope) < 1e-12


def test_composition_and_padding():
    rng = np.random.default_rng(3)
    src = random_binary_source(rng)
    sched = random_schedule(rng, src, 3, "B")
    for agent in "AB":
        total, parts = composition_check(induce_joint(src, sched), agent)
        assert total == pytest.approx(sum(parts), abs=1e-12)
    a = evaluate(src, sched)
    b = evaluate(src, pad_round(sched))
    for f in ("L1", "L2", "D1", "D2"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-12)


def test_log_loss_posterior_identity():
    rng = np.random.default_rng(4)
    src = random_binary_source(rng)
    j = induce_joint(src, random_schedule(rng, src, 2))
    post = posterior_channel(j, "X1", ("U1", "U2", "X2"))
    val = expected_distortion(j, post.__class__(post.scope, ("X1_hat", post.alphabet), post.rows),
                              DistortionFn.log_loss(), "A")
    assert val == pytest.approx(log_loss_distortion(j, "A"), abs=1e-12)
    assert log_loss_distortion(j, "A") == pytest.approx(
        conditional_entropy(j, "X1", ("U1", "U2", "X2")), abs=1e-15)


def test_reconstruction_scope_checked():
    rng = np.random.default_rng(5)
    src = random_binary_source(rng)
    j = induce_joint(src, random_schedule(rng, src, 1))
    cheat = Channel(("X1",), ("X1_hat", BINARY), np.eye(2))
    with pytest.raises(ScheduleError):
        expected_distortion(j, cheat, DistortionFn.hamming(BINARY), "A")


def test_bayes_reconstruction_is_optimal_among_deterministic():
    rng = np.random.default_rng(6)
    src = random_binary_source(rng)
    j = induce_joint(src, random_schedule(rng, src, 1))
    d = DistortionFn.hamming(BINARY)
    best = distortion(j, "A", d)
    # brute force over all maps (U1, X2) -> xhat
    vals = []
    for bits in range(16):
        rows = np.zeros((2, 2, 2))
        for i in range(4):
            rows[i // 2, i % 2, (bits >> i) & 1] = 1
        vals.append(expected_distortion(j, Channel(("U1", "X2"), ("X1_hat", BINARY), rows), d, "A"))
    assert best == pytest.approx(min(vals), abs=1e-12)
    assert bayes_reconstruction(j, d, "A").scope == ("U1", "X2")


def test_erasure_distortion_infinite_on_flip():
    from interpriv.analysis import erasure_source, identity_reconstruction
    src = erasure_source(0.1)
    sched = MechanismSchedule("A", (Channel(("X1",), ("U1", Alphabet(("0", "e", "1"))),
                                            [[0.9, 0.0, 0.1], [0.0, 0.0, 1.0]]),))
    j = induce_joint(src, sched)
    assert expected_distortion(j, identity_reconstruction("U1"), DistortionFn.erasure(), "A") == np.inf


def test_lift_and_broadcast():
    rng = np.random.default_rng(7)
    src = random_binary_source(rng)
    first = random_schedule(rng, src, 2, "A")
    compact = Channel(("U2",), ("U3", BINARY), [[0.3, 0.7], [0.6, 0.4]])
    full = lift(compact, "A", 3)
    assert full.scope == ("X1", "U1", "U2")
    s1 = MechanismSchedule("A", first.rounds + (full,))
    broadcast = Channel(("X1", "U1", "U2"), ("U3", BINARY), compact.rows[None, None])
    s2 = MechanismSchedule("A", first.rounds + (broadcast,))
    assert sum_leakage(induce_joint(src, s1)) == pytest.approx(sum_leakage(induce_joint(src, s2)))


def test_budget_validation():
    with pytest.raises(ValueError):
        InteractionBudget()
    with pytest.raises(ValueError):
        InteractionBudget(taus=(-0.1, 0.0))
    src = random_binary_source(np.random.default_rng(8))
    b = InteractionBudget.log_loss(src, float("inf"), 0.0)
    assert b.taus[0] == 0.0 and b.taus[1] > 0
