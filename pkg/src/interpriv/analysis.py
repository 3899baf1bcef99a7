"""Benefit-of-interaction analysis.

Covers the binary erasure example (one and two rounds), the leakage
reduction function eta, round-monotonicity reports, and the
log-loss concavity witness built on the binary chain source family.

For one-round problems with a single speaker the program

    max H(Y1 | X2, U)   s.t.   H(X1 | X2, U) <= D

is positively homogeneous in each column of P(u | x1), so it is a linear
program over "types" (normalized columns) with weights.  :func:`eta_one_round_lp`
solves it on a type mesh refined around the active types; this gives far
tighter values than the channel mesh of :func:`solvers.grid_oracle`.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .dist import BINARY, Alphabet, Channel, DistortionFn, JointPmf, PmfError, add_binary_noise, \
    bsc, make_dsbs
from .info import binary_entropy, conditional_entropy, entropy, entropy_array, mutual_information
from .mechanism import (InteractionBudget, MechanismSchedule, expected_distortion, induce_joint,
                        leakage, log_loss_distortion, per_round_leakage, sum_leakage)
from .solvers import InfeasibleError, algorithm1, grid_oracle, simplex_grid, _local_offsets

log = logging.getLogger(__name__)

H = binary_entropy
ERASURE_ALPHABET = Alphabet(("0", "e", "1"))


def _prob(name: str, v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name}={v} outside [0, 1]")


# ---------------------------------------------------------------------------
# erasure example

def erasure_source(p: float, r: float | None = None) -> JointPmf:
    """(X1, X2) ~ DSBS(p) with Y_i = X_i xor Ber(r); ``r`` defaults to ``p``."""
    _prob("p", p)
    r = p if r is None else r
    _prob("r", r)
    s = make_dsbs(p)
    s = add_binary_noise(s, on="X1", r=r, as_="Y1")
    return add_binary_noise(s, on="X2", r=r, as_="Y2")


def erasure_one_round(p: float, D1: float) -> float:
    """Minimal one-round sum leakage under erasure distortion, in bits."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"p={p} outside (0, 1/2)")
    _prob("D1", D1)
    return float(2.0 - ((1 - D1) * H(p) + (1 + D1) * H(2 * p * (1 - p))))


def erasure_leakage_alpha(p: float, a0: float, a1: float) -> tuple[float, float]:
    """Sum leakage and distortion of the erasure mechanism with erasure rates (a0, a1).

    Uses the closed-form expansion of H(Y1 | U1, X2) for the uniform DSBS.
    """
    for n, v in (("p", p), ("a0", a0), ("a1", a1)):
        _prob(n, v)
    q = 1 - p
    h = 0.5 * (1 - a0) * H(p) + 0.5 * (1 - a1) * H(p)
    w0 = q * a0 + p * a1
    w1 = p * a0 + q * a1
    if w0 > 0:
        h += 0.5 * w0 * H((q * q * a0 + p * p * a1) / w0)
    if w1 > 0:
        h += 0.5 * w1 * H((p * q * a0 + p * q * a1) / w1)
    return float(2.0 - H(2 * p * q) - h), 0.5 * (a0 + a1)


def erasure_one_round_schedule(a0: float, a1: float | None = None) -> MechanismSchedule:
    """A-initiated single round: X1 is erased with probability a0 (x=0) or a1 (x=1)."""
    a1 = a0 if a1 is None else a1
    rows = [[1 - a0, a0, 0.0], [0.0, a1, 1 - a1]]
    return MechanismSchedule("A", (Channel(("X1",), ("U1", ERASURE_ALPHABET), rows),))


def agreement_channel(beta: float) -> Channel:
    """P(U2 | X1, U1): answer only when X1 agrees with U1, otherwise erase."""
    _prob("beta", beta)
    rows = np.zeros((2, 2, 3))
    rows[0, 0] = [1 - beta, beta, 0.0]
    rows[1, 0] = [0.0, 1.0, 0.0]
    rows[0, 1] = [0.0, 1.0, 0.0]
    rows[1, 1] = [0.0, beta, 1 - beta]
    return Channel(("X1", "U1"), ("U2", ERASURE_ALPHABET), rows)


def two_round_erasure_schedule(alpha: float, beta: float,
                               convention: str = "crossover") -> MechanismSchedule:
    """B-initiated schedule: U1 = BSC(X2), then the agreement channel.

    ``convention="crossover"`` reads alpha as the BSC crossover probability,
    ``"match"`` as the probability that U1 equals X2.
    """
    _prob("alpha", alpha)
    if convention not in ("crossover", "match"):
        raise ValueError(f"unknown convention {convention!r}")
    e = alpha if convention == "crossover" else 1.0 - alpha
    return MechanismSchedule("B", (bsc("X2", "U1", e), agreement_channel(beta)))


def identity_reconstruction(name: str = "U2") -> Channel:
    return Channel((name,), ("X1_hat", ERASURE_ALPHABET), np.eye(3))


@dataclass(frozen=True)
class TwoRoundErasure:
    """Two-round erasure example evaluated on the induced joint.

    ``lsum2`` is the round-sum objective I(Y2; U1, X1) + I(Y1; U2 | U1, X2);
    ``full_sum`` adds the leakage floor I(Y1; X2) and equals the sum leakage
    I(Y1; U1, U2, X2) + I(Y2; U1, U2, X1).
    """

    lsum2: float
    d1: float
    full_sum: float
    convention: str


def two_round_erasure(p: float, alpha: float, beta: float,
                      convention: str = "crossover", r: float | None = None) -> TwoRoundErasure:
    """Evaluate the two-round erasure construction with reconstruction X1_hat = U2."""
    joint = induce_joint(erasure_source(p, r), two_round_erasure_schedule(alpha, beta, convention))
    d1 = expected_distortion(joint, identity_reconstruction(), DistortionFn.erasure(), "A")
    lsum2 = leakage(joint, "B") + per_round_leakage(joint, 2, "A")
    return TwoRoundErasure(lsum2, d1, sum_leakage(joint), convention)


# ---------------------------------------------------------------------------
# binary chain family and the reference bounds

def bsc_chain_source(p: float, r: float, q: float) -> JointPmf:
    """X2 ~ Ber(q), X1 = X2 xor Ber(p), Y1 = X1 xor Ber(r), Y2 constant."""
    for n, v in (("p", p), ("r", r), ("q", q)):
        _prob(n, v)
    x2 = np.array([1 - q, q])
    x1_x2 = np.array([[1 - p, p], [p, 1 - p]])          # x2, x1
    y1_x1 = np.array([[1 - r, r], [r, 1 - r]])          # x1, y1
    t = np.einsum("b,ba,ay->ayb", x2, x1_x2, y1_x1)[..., None]
    return JointPmf((("X1", BINARY), ("Y1", BINARY), ("X2", BINARY), ("Y2", Alphabet(["0"]))), t)


def bsc_chain_conditional(p: float, r: float) -> np.ndarray:
    """P(x1, y1 | x2) with rows (00, 01, 10, 11) and columns x2 = 0, 1."""
    pb, rb = 1 - p, 1 - r
    return np.array([[pb * rb, p * rb], [pb * r, p * r], [p * r, pb * r], [p * rb, pb * rb]])


def asymmetric_erasure_channel(a20: float, a21: float) -> Channel:
    """Erase X1 with probability a20 (x1=0) or a21 (x1=1); output symbols 0, 1, e."""
    _prob("a20", a20)
    _prob("a21", a21)
    rows = [[1 - a20, 0.0, a20], [0.0, 1 - a21, a21]]
    return Channel(("X1",), ("U1", Alphabet(("0", "1", "e"))), rows)


def _wh(w: float, x: float) -> float:
    return 0.0 if w <= 0 else w * float(H(x))


def gamma_fn(p: float, q: float, r: float, a20: float, a21: float) -> float:
    """H(X1 | X2, U) of the fixed erasure mechanism on the binary chain source (r unused)."""
    for n, v in (("p", p), ("q", q), ("r", r), ("a20", a20), ("a21", a21)):
        _prob(n, v)
    pb, qb = 1 - p, 1 - q
    w0 = pb * a20 + p * a21
    w1 = p * a20 + pb * a21
    return (qb * _wh(w0, pb * a20 / w0 if w0 else 0.0)
            + q * _wh(w1, p * a20 / w1 if w1 else 0.0))


def C_fn(p: float, q: float, r: float, a20: float, a21: float) -> float:
    """H(Y1 | X2, U) of the fixed erasure mechanism on the binary chain source."""
    for n, v in (("p", p), ("q", q), ("r", r), ("a20", a20), ("a21", a21)):
        _prob(n, v)
    pb, qb, rb = 1 - p, 1 - q, 1 - r
    b0, b1 = 1 - a20, 1 - a21
    out = qb * (pb * b0 + p * b1) * H(r) + q * (p * b0 + pb * b1) * H(r)
    w0 = pb * a20 + p * a21
    w1 = p * a20 + pb * a21
    out += qb * _wh(w0, (pb * rb * a20 + p * r * a21) / w0 if w0 else 0.0)
    out += q * _wh(w1, (p * r * a20 + pb * rb * a21) / w1 if w1 else 0.0)
    return float(out)


@dataclass(frozen=True)
class BoundReport:
    gamma: float
    C: float
    h_r: float
    d_plus_hr: float

    @property
    def C_exceeds(self) -> bool:
        """Whether C > D + H(r), the 'sufficient' inequality."""
        return self.C > self.d_plus_hr


def bound_report(p: float, q: float, r: float, a20: float, a21: float) -> BoundReport:
    g = gamma_fn(p, q, r, a20, a21)
    hr = float(H(r))
    return BoundReport(g, C_fn(p, q, r, a20, a21), hr, g + hr)


# ---------------------------------------------------------------------------
# one-round eta by linear programming over types

@dataclass(frozen=True)
class LpEta:
    """One-round eta from the type LP.

    ``value`` is re-evaluated exactly on the final channel, so it is
    achievable.  For binary X1, ``upper`` is an upper bound from the LP dual
    checked over the whole type interval and ``slack = upper - value``.
    Otherwise ``upper`` is nan and ``slack`` is the change over the last
    refinement plus 1e-9.
    """

    value: float
    slack: float
    channel: Channel = field(repr=False)
    distortion: float = 0.0
    history: tuple = field(default=(), repr=False)
    upper: float = float("nan")


def _cond_h_weighted(M: np.ndarray) -> np.ndarray:
    """H(A | B) of unnormalized masses M[..., b, a] per leading index."""
    return entropy_array(M, axis=(-2, -1)) - entropy_array(M.sum(axis=-1), axis=-1)


def eta_one_round_lp(source: JointPmf, D1: float, D2: float = float("inf"),
                     mesh: int = 2000, passes: int = 4, zoom: int = 100,
                     certify: bool = True) -> LpEta:
    """eta^A_1 = H(Y1) + H(Y2) - L^A_sum,1 under log-loss, via the type LP."""
    P = source.array(("X2", "X1", "Y1"))               # b, x, y
    m = P.shape[1]
    if conditional_entropy(source, "X2", "X1") > D2 + 1e-12:
        raise InfeasibleError("D2 is below H(X2 | X1); no one-round A mechanism meets it")

    def columns(T):
        # T: (n, m) types; masses per (type, x2, x1/y1)
        Mx = P.sum(axis=2)[None] * T[:, None, :]          # n, b, x
        My = np.einsum("bxy,nx->nby", P, T)
        return _cond_h_weighted(My), _cond_h_weighted(Mx)

    def solve(T):
        F, G = columns(T)
        res = linprog(-F, A_ub=G[None], b_ub=[D1], A_eq=T.T, b_eq=np.ones(m),
                      bounds=(0, None), method="highs")
        if res.status != 0:
            raise InfeasibleError(f"type LP failed: {res.message}")
        return -res.fun, res.x, (-res.ineqlin.marginals[0], -res.eqlin.marginals)

    def dual_bound(lam, mu):
        lam = max(lam, 0.0)
        # weak duality: eta <= lam D1 + sum(mu) + m max_t (F - lam G - mu.t)^+
        def phi(t):
            T = np.stack([1 - t, t], axis=1)
            F, G = columns(T)
            return F - lam * G - T @ mu
        t = np.linspace(0.0, 1.0, 200_001)
        v = phi(t)
        top = float(v.max())
        for i in np.argsort(v)[-5:]:
            lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
            r = minimize_scalar(lambda x: -phi(np.array([x]))[0], bounds=(lo, hi),
                                method="bounded", options={"xatol": 1e-13})
            top = max(top, -float(r.fun))
        return float(lam * D1 + mu.sum() + m * max(top, 0.0))

    steps = mesh if m == 2 else max(4, int(round(mesh ** (1 / (m - 1)))))
    T = simplex_grid(m, steps)
    h = 1.0 / steps
    history = []
    prev = None
    for it in range(passes):
        val, w, duals = solve(T)
        history.append(val)
        active = T[w > 1e-12]
        if it == passes - 1:
            break
        offs = _local_offsets(m, zoom) * (h / zoom) if m == 2 else _local_offsets(m, 10) * (h / 10)
        new = [T] + [np.clip(a + offs, 0, 1) for a in active]
        T = np.concatenate(new)
        T = T[T.sum(axis=1) > 0]
        T = np.unique(T / T.sum(axis=1, keepdims=True), axis=0)
        h = h / (zoom if m == 2 else 10)
        prev = val
    cols = (active * w[w > 1e-12][:, None]).T             # x, u
    cols = cols / cols.sum(axis=1, keepdims=True)
    ch = Channel(("X1",), ("U1", Alphabet.range(cols.shape[1])), cols)
    joint = induce_joint(source, MechanismSchedule("A", (ch,)))
    value = entropy(source, "Y1") + entropy(source, "Y2") - sum_leakage(joint)
    d = log_loss_distortion(joint, "A")
    if m == 2 and certify:
        upper = max(dual_bound(*duals), value)
        slack = upper - value
    else:
        upper = float("nan")
        slack = (abs(val - prev) if prev is not None else h) + 1e-9
    return LpEta(float(value), float(slack), ch, float(d), tuple(history), float(upper))


# ---------------------------------------------------------------------------
# eta and monotonicity

@dataclass(frozen=True)
class EtaResult:
    value: float
    direction: str
    rounds: int
    distortion: tuple[float, float]
    solver: str
    slack: float = 0.0


def eta(source: JointPmf, K: int, D: tuple[float, float], initiator: str = "A",
        method: str = "oracle", cards: Sequence[int] | None = None,
        resolution=None, taus: Sequence[float] | None = None) -> EtaResult:
    """H(Y1) + H(Y2) minus the solver's minimal K-round sum leakage at log-loss D."""
    D1, D2 = D
    top = entropy(source, "Y1") + entropy(source, "Y2")
    budget = InteractionBudget.log_loss(source, D1, D2)
    if K == 0 or method == "oracle":
        cards = tuple(cards) if cards is not None else ((3,) if K == 1 else (2,) * K)
        res = grid_oracle(source, K, cards, budget, resolution, initiator)
        step = max(res.resolution, default=0.0)
        return EtaResult(top - res.objective, initiator, K, (D1, D2), "oracle", 2 * step)
    if method == "lp":
        if K != 1 or initiator != "A":
            raise ValueError("the type LP covers one A-initiated round")
        r = eta_one_round_lp(source, D1, D2)
        return EtaResult(r.value, "A", 1, (D1, D2), "lp", r.slack)
    if method == "algorithm1":
        if taus is None:
            raise ValueError("algorithm1 needs per-round thresholds")
        res = algorithm1(source, K, taus, initiator)
        return EtaResult(top - res.objective, initiator, K, (D1, D2), "algorithm1")
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class MonotonicityReport:
    LA: tuple[float, ...]
    LB: tuple[float, ...]
    slack: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def monotonicity_check(source: JointPmf, Kmax: int, D: tuple[float, float],
                       resolution: dict | None = None, dfns=None,
                       slack: float | None = None) -> MonotonicityReport:
    """Oracle sum leakages L^A_k, L^B_k for k = 0..Kmax and the monotonicity inequalities.

    ``resolution`` maps K to a mesh step (default 1/16 for K=1, 1/8 beyond).
    Infeasible points are recorded as +inf.  Default slack is twice the
    coarsest mesh step used, in bits.
    """
    resolution = {**{1: 1 / 16}, **{k: 1 / 8 for k in range(2, Kmax + 1)}, **(resolution or {})}
    if dfns is None:
        budget = InteractionBudget.log_loss(source, *D)
    else:
        budget = InteractionBudget(caps=tuple(D), dfns=tuple(dfns))
    out = {"A": [], "B": []}
    for k in range(Kmax + 1):
        for init in "AB":
            try:
                r = grid_oracle(source, k, (2,) * k, budget, resolution.get(k), init)
                out[init].append(r.objective)
            except InfeasibleError:
                out[init].append(float("inf"))
    used = [resolution[k] for k in range(1, Kmax + 1)] or [0.0]
    slack = 2 * max(used) if slack is None else slack
    LA, LB = out["A"], out["B"]
    bad = []
    for k in range(1, Kmax + 1):
        for name, seq in (("A", LA), ("B", LB)):
            if seq[k] > seq[k - 1] + slack:
                bad.append(f"L{name}[{k}]={seq[k]:.6f} > L{name}[{k-1}]={seq[k-1]:.6f}")
        if LA[k] > LB[k - 1] + slack:
            bad.append(f"LA[{k}]={LA[k]:.6f} > LB[{k-1}]={LB[k-1]:.6f}")
        if LB[k] > LA[k - 1] + slack:
            bad.append(f"LB[{k}]={LB[k]:.6f} > LA[{k-1}]={LA[k-1]:.6f}")
    return MonotonicityReport(tuple(LA), tuple(LB), slack, tuple(bad))


# ---------------------------------------------------------------------------
# concavity witness

@dataclass(frozen=True)
class WitnessResult:
    p: float
    r: float
    q: float
    D: float
    lhs: float          # eta at X2 ~ Ber(1/2)
    rhs: float          # mean of eta at Ber(q) and Ber(1-q)
    slack: float
    tolerance: float

    @property
    def violated(self) -> bool:
        return self.lhs < self.rhs - self.tolerance

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def concavity_witness(p: float, r: float, q: float, D: float, card_U: int = 3,
                      method: str = "lp", tolerance: float | None = None,
                      resolution: float | None = None) -> WitnessResult:
    """Compare eta^A_1 at the midpoint X2 marginal against the endpoint average.

    ``method="lp"`` uses the type LP (optimal channels use at most
    |X1| + 1 = 3 outputs) and brackets each value between an achievable
    channel and a dual upper bound; ``"oracle"`` uses :func:`grid_oracle`
    with ``card_U`` outputs and its a-priori mesh slack.  The default
    tolerance is three times the largest slack.
    """
    def one(qq):
        src = bsc_chain_source(p, r, qq)
        if method == "lp":
            res = eta_one_round_lp(src, D)
            return res.value, res.slack
        e = eta(src, 1, (D, float("inf")), "A", "oracle", (card_U,), resolution)
        return e.value, e.slack

    e1, s1 = one(q)
    e2, s2 = one(1 - q)
    em, sm = one(0.5)
    slack = max(s1, s2, sm)
    tol = 3 * slack if tolerance is None else tolerance
    return WitnessResult(p, r, q, D, em, 0.5 * (e1 + e2), slack, tol)


def concavity_sweep(q: float, ps: Sequence[float], rs: Sequence[float],
                    a20: float = 0.1, a21: float = 0.6, **kw) -> list[WitnessResult]:
    """Witness test over a (p, r) grid with D = gamma at the fixed erasure mechanism."""
    out = []
    for p in ps:
        D = gamma_fn(p, q, 0.5, a20, a21)
        for r in rs:
            out.append(concavity_witness(p, r, q, D, **kw))
    return out


def eta_b2_envelope(p: float, r: float, q: float, D: float,
                    q_grid: Sequence[float], d_grid: Sequence[float],
                    mesh: int = 400, passes: int = 3) -> float:
    """Achievable eta^B_2 on the binary chain family from a (q', D') grid.

    B's opening release splits X2's marginal into a mixture; A then answers
    optimally in each branch.  The best split over the grid is an LP, giving
    a lower bound on eta^B_2 that is exact in the grid limit.
    """
    qs = np.unique(np.concatenate([np.asarray(q_grid, float), [q]]))
    ds = np.unique(np.concatenate([np.asarray(d_grid, float), [D]]))
    vals = np.array([[eta_one_round_lp(bsc_chain_source(p, r, a), b, mesh=mesh, passes=passes,
                                   certify=False).value
                      for b in ds] for a in qs])
    qq, dd = np.meshgrid(qs, ds, indexing="ij")
    res = linprog(-vals.ravel(), A_ub=dd.ravel()[None], b_ub=[D],
                  A_eq=np.vstack([np.ones(qq.size), qq.ravel()]), b_eq=[1.0, q],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise InfeasibleError(f"envelope LP failed: {res.message}")
    return float(-res.fun)


# ---------------------------------------------------------------------------

def rate_from_leakage(L: float, source: JointPmf) -> float:
    """Sum rate L - I(X1; X2); a negative value means L is below the leakage floor."""
    R = L - mutual_information(source, "X1", "X2")
    if R < -1e-12:
        warnings.warn(f"leakage {L} is below I(X1;X2); rate {R} is negative", stacklevel=2)
    return float(R)
