"""K-round interactive mechanisms between agents A and B.

Agent A holds public ``X1`` and private ``Y1``; agent B holds ``X2`` and
``Y2``.  Round ``k`` releases ``U{k}``.  The speaker of round ``k`` sees only
its own public variable and the earlier releases, which is how the required
Markov chains (private data never enters a release) are encoded
structurally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dist import Alphabet, Channel, DistortionFn, JointPmf, PmfError, align, extend
from .info import conditional_entropy, mutual_information

AGENTS = ("A", "B")
PUBLIC = {"A": "X1", "B": "X2"}
PRIVATE = {"A": "Y1", "B": "Y2"}
SOURCE_VARS = ("X1", "Y1", "X2", "Y2")
_U = re.compile(r"^U(\d+)$")


class ScheduleError(PmfError):
    """A round conditions on data its speaker may not use."""


def other(agent: str) -> str:
    _check_agent(agent)
    return "B" if agent == "A" else "A"


def _check_agent(agent: str) -> None:
    if agent not in AGENTS:
        raise ValueError(f"agent must be 'A' or 'B', got {agent!r}")


def round_name(k: int) -> str:
    return f"U{k}"


def speaker(initiator: str, k: int) -> str:
    """Agent releasing round ``k`` (1-based)."""
    return initiator if k % 2 == 1 else other(initiator)


def round_scope(initiator: str, k: int) -> tuple[str, ...]:
    return (PUBLIC[speaker(initiator, k)],) + tuple(round_name(j) for j in range(1, k))


def release_names(joint: JointPmf) -> tuple[str, ...]:
    found = sorted((int(m.group(1)), n) for n in joint.names if (m := _U.match(n)))
    return tuple(n for _, n in found)


@dataclass(frozen=True)
class MechanismSchedule:
    """Ordered per-round channels; round ``k`` must output ``U{k}``.

    A channel's scope must be exactly the speaker's public variable plus
    ``U1..U{k-1}``.  Scope axes of length 1 broadcast, so a channel that
    ignores some of its scope can be stored compactly.
    """

    initiator: str = "A"
    rounds: tuple[Channel, ...] = ()

    def __post_init__(self) -> None:
        _check_agent(self.initiator)
        object.__setattr__(self, "rounds", tuple(self.rounds))
        for k, ch in enumerate(self.rounds, start=1):
            want = round_scope(self.initiator, k)
            if ch.name != round_name(k):
                raise ScheduleError(f"round {k} must output {round_name(k)}, got {ch.name}")
            if set(ch.scope) != set(want):
                raise ScheduleError(
                    f"round {k} ({speaker(self.initiator, k)} speaking) must condition on "
                    f"exactly {want}, got {ch.scope}")

    @property
    def K(self) -> int:
        return len(self.rounds)

    def speaker(self, k: int) -> str:
        return speaker(self.initiator, k)


@dataclass(frozen=True)
class TradeoffPoint:
    """Leakages in bits and distortions in the distortion's own units."""

    L1: float
    L2: float
    D1: float
    D2: float

    def __post_init__(self) -> None:
        if min(self.L1, self.L2) < 0 or min(self.D1, self.D2) < 0:
            raise ValueError(f"negative leakage or distortion in {self}")

    @property
    def sum_leakage(self) -> float:
        return self.L1 + self.L2


@dataclass(frozen=True)
class InteractionBudget:
    """Utility demand for a solver.

    Either ``taus`` (mutual-information floors in bits, one per agent for
    end-to-end solvers or one per round for :func:`algorithm1`) or ``caps``
    (distortion caps ``(D1, D2)``) with optional per-agent distortion
    functions; ``None`` distortion means log-loss.
    """

    taus: tuple[float, ...] | None = None
    caps: tuple[float, float] | None = None
    dfns: tuple[DistortionFn | None, DistortionFn | None] = field(default=(None, None))

    def __post_init__(self) -> None:
        if (self.taus is None) == (self.caps is None):
            raise ValueError("give exactly one of taus or caps")
        if self.taus is not None:
            taus = tuple(float(t) for t in self.taus)
            if any(not np.isfinite(t) or t < 0 for t in taus):
                raise ValueError(f"thresholds must be finite and nonnegative: {taus}")
            object.__setattr__(self, "taus", taus)
        if self.caps is not None:
            caps = tuple(float(c) for c in self.caps)
            if len(caps) != 2 or any(np.isnan(c) or c < 0 for c in caps):
                raise ValueError(f"distortion caps must be two nonnegative numbers: {caps}")
            object.__setattr__(self, "caps", caps)

    @classmethod
    def log_loss(cls, source: JointPmf, D1: float, D2: float) -> "InteractionBudget":
        """Floors equivalent to log-loss caps: tau_i = H(X_i) - D_i, clipped at 0."""
        from .info import entropy
        taus = (max(0.0, entropy(source, "X1") - D1) if np.isfinite(D1) else 0.0,
                max(0.0, entropy(source, "X2") - D2) if np.isfinite(D2) else 0.0)
        return cls(taus=taus)


def _check_source(source: JointPmf) -> None:
    missing = [n for n in SOURCE_VARS if n not in source.names]
    if missing:
        raise PmfError(f"source lacks {missing}; needs {SOURCE_VARS}")


def cardinality_cap(source: JointPmf, sched: MechanismSchedule, k: int) -> int:
    """Largest alphabet round ``k`` needs: |X_speaker| * prod_{j<k} |U_j| + 1."""
    size = source.alphabet(PUBLIC[sched.speaker(k)]).size
    for ch in sched.rounds[:k - 1]:
        size *= ch.alphabet.size
    return size + 1


def _broadcast_channel(ch: Channel, joint: JointPmf) -> Channel:
    shape = tuple(joint.alphabet(n).size for n in ch.scope) + (ch.alphabet.size,)
    if ch.rows.shape == shape:
        return ch
    try:
        rows = np.broadcast_to(ch.rows, shape)
    except ValueError:
        raise PmfError(f"channel {ch.name} rows {ch.rows.shape} do not fit scope sizes {shape}") from None
    return Channel(ch.scope, ch.output, rows)


def induce_joint(source: JointPmf, sched: MechanismSchedule) -> JointPmf:
    """Joint over (X1, Y1, X2, Y2, U1..UK) obtained by chaining the rounds."""
    _check_source(source)
    if release_names(source):
        raise ScheduleError("source already contains release variables")
    joint = source
    for k, ch in enumerate(sched.rounds, start=1):
        cap = cardinality_cap(source, sched, k)
        if ch.alphabet.size > cap:
            raise ScheduleError(f"round {k} alphabet {ch.alphabet.size} exceeds cap {cap}")
        joint = extend(joint, _broadcast_channel(ch, joint))
    return joint


def observables(joint: JointPmf, receiver: str) -> tuple[str, ...]:
    """What ``receiver`` holds at the end: its own public data and every release."""
    return release_names(joint) + (PUBLIC[receiver],)


def leakage(joint: JointPmf, agent: str = "A") -> float:
    """Leakage of ``agent``'s private data at the other agent, e.g. I(Y1; U^K, X2)."""
    _check_agent(agent)
    return mutual_information(joint, PRIVATE[agent], observables(joint, other(agent)))


def sum_leakage(joint: JointPmf) -> float:
    return leakage(joint, "A") + leakage(joint, "B")


def per_round_leakage(joint: JointPmf, k: int, agent: str = "A") -> float:
    """I(Y_agent; U_k | X_other, U_1..U_{k-1})."""
    us = release_names(joint)
    if not 1 <= k <= len(us):
        raise IndexError(f"round {k} out of range 1..{len(us)}")
    given = (PUBLIC[other(agent)],) + us[:k - 1]
    return mutual_information(joint, PRIVATE[agent], us[k - 1], given)


def composition_check(joint: JointPmf, agent: str = "A") -> tuple[float, list[float]]:
    """Total leakage and its parts: I(Y; X_far) followed by one term per round."""
    total = leakage(joint, agent)
    parts = [mutual_information(joint, PRIVATE[agent], PUBLIC[other(agent)])]
    parts += [per_round_leakage(joint, k, agent) for k in range(1, len(release_names(joint)) + 1)]
    return total, parts


def log_loss_distortion(joint: JointPmf, agent: str = "A") -> float:
    """Optimal expected log-loss for reconstructing ``agent``'s public data: H(X | U^K, X_far)."""
    return conditional_entropy(joint, PUBLIC[agent], observables(joint, other(agent)))


def posterior_channel(joint: JointPmf, target: str, given: Sequence[str]) -> Channel:
    """P(target | given) as a channel; zero-probability rows are set uniform."""
    given = tuple(given)
    arr = joint.array(given + (target,))
    mass = arr.sum(axis=-1, keepdims=True)
    alph = joint.alphabet(target)
    with np.errstate(invalid="ignore", divide="ignore"):
        rows = np.where(mass > 0, arr / np.where(mass > 0, mass, 1.0), 1.0 / alph.size)
    return Channel(given, (target + "_post", alph), rows)


def expected_distortion(joint: JointPmf, recon: Channel, dfn: DistortionFn,
                        agent: str = "A") -> float:
    """E d(X_agent, Xhat) where Xhat ~ recon(. | receiver observables).

    For log-loss, ``recon`` is a soft reconstruction whose output alphabet is
    the alphabet of ``X_agent``.  Returns +inf when a positive-probability
    pair has infinite cost.
    """
    _check_agent(agent)
    x = PUBLIC[agent]
    allowed = set(observables(joint, other(agent)))
    if not set(recon.scope) <= allowed:
        raise ScheduleError(
            f"reconstruction scope {recon.scope} uses data the receiver does not hold "
            f"(allowed {sorted(allowed)})")
    recon = _broadcast_channel(recon, joint)
    pxo = joint.array((x,) + recon.scope)                 # x, obs...
    rows = recon.rows                                      # obs..., xhat
    flat_p = pxo.reshape(pxo.shape[0], -1)
    flat_r = rows.reshape(-1, rows.shape[-1])
    if dfn.kind == "log-loss":
        if recon.alphabet.symbols != joint.alphabet(x).symbols:
            raise PmfError("log-loss reconstruction must be a distribution over X")
        q = flat_r.T                                       # x, obs
        with np.errstate(divide="ignore"):
            cost = -np.log2(q)
        pos = flat_p > 0
        if np.any(np.isinf(cost[pos])):
            return float("inf")
        return float(np.sum(flat_p[pos] * cost[pos]))
    if recon.alphabet.symbols != dfn.reproduction.symbols:
        raise PmfError("reconstruction alphabet must match the distortion's reproduction alphabet")
    mass = flat_p @ flat_r                                 # x, xhat
    d = dfn.table
    if np.any((mass > 0) & np.isinf(d)):
        return float("inf")
    return float(np.sum(np.where(mass > 0, mass * np.where(np.isinf(d), 0.0, d), 0.0)))


def bayes_reconstruction(joint: JointPmf, dfn: DistortionFn, agent: str = "A") -> Channel:
    """Deterministic reconstruction minimizing E d given the receiver's observables."""
    if dfn.kind == "log-loss":
        obs = observables(joint, other(agent))
        ch = posterior_channel(joint, PUBLIC[agent], obs)
        return Channel(ch.scope, (PUBLIC[agent] + "_hat", ch.alphabet), ch.rows)
    x = PUBLIC[agent]
    obs = observables(joint, other(agent))
    pxo = joint.array((x,) + obs)
    flat = pxo.reshape(pxo.shape[0], -1)                   # x, obs
    d = dfn.table
    with np.errstate(invalid="ignore"):
        risk = np.where(flat[:, :, None] > 0, flat[:, :, None] * d[:, None, :], 0.0).sum(axis=0)
    best = np.argmin(risk, axis=1)                          # first minimizer: deterministic
    rows = np.zeros((flat.shape[1], d.shape[1]))
    rows[np.arange(flat.shape[1]), best] = 1.0
    shape = tuple(joint.alphabet(n).size for n in obs) + (d.shape[1],)
    return Channel(obs, (x + "_hat", dfn.reproduction), rows.reshape(shape))


def distortion(joint: JointPmf, agent: str, dfn: DistortionFn | None = None,
               recon: Channel | None = None) -> float:
    """Distortion at the receiver of ``agent``'s public data (log-loss when ``dfn`` is None)."""
    if dfn is None or dfn.kind == "log-loss":
        if recon is None:
            return log_loss_distortion(joint, agent)
        return expected_distortion(joint, recon, DistortionFn.log_loss(), agent)
    if recon is None:
        recon = bayes_reconstruction(joint, dfn, agent)
    return expected_distortion(joint, recon, dfn, agent)


def evaluate(source: JointPmf, sched: MechanismSchedule,
             dfns: tuple[DistortionFn | None, DistortionFn | None] = (None, None),
             recons: tuple[Channel | None, Channel | None] = (None, None)) -> TradeoffPoint:
    joint = induce_joint(source, sched)
    return TradeoffPoint(
        L1=leakage(joint, "A"), L2=leakage(joint, "B"),
        D1=distortion(joint, "A", dfns[0], recons[0]),
        D2=distortion(joint, "B", dfns[1], recons[1]))


def pad_round(sched: MechanismSchedule) -> MechanismSchedule:
    """Append a round whose release is constant; every evaluated quantity is unchanged."""
    k = sched.K + 1
    scope = round_scope(sched.initiator, k)
    ch = Channel(scope, (round_name(k), Alphabet(["0"])), np.ones((1,) * len(scope) + (1,)))
    return MechanismSchedule(sched.initiator, sched.rounds + (ch,))


def lift(ch: Channel, initiator: str, k: int) -> Channel:
    """Re-express a channel on a subset of round ``k``'s scope over the full scope."""
    full = round_scope(initiator, k)
    if not set(ch.scope) <= set(full):
        raise ScheduleError(f"{ch.scope} is not within round {k} scope {full}")
    rows = align(ch.rows, ch.scope + (ch.name,), full + (ch.name,))
    return Channel(full, (round_name(k), ch.alphabet), rows)
