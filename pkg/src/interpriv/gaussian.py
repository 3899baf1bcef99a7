"""Jointly Gaussian sources under mean-square distortion.

The covariance is over (X1, Y1, X2, Y2), zero means.  Leakages are in bits,
distortions in variance units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

ORDER = ("X1", "Y1", "X2", "Y2")
_IX = {n: i for i, n in enumerate(ORDER)}
_ROLES = {"A": ("X1", "Y1", "X2"), "B": ("X2", "Y2", "X1")}


class GaussianError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianSource:
    covariance: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.covariance, dtype=float)
        if c.shape != (4, 4):
            raise GaussianError(f"covariance must be 4x4, got {c.shape}")
        if not np.allclose(c, c.T, atol=1e-12):
            raise GaussianError("covariance is not symmetric")
        if np.any(np.diag(c) <= 0):
            raise GaussianError("variances must be positive")
        if np.linalg.eigvalsh(c).min() < -1e-10:
            raise GaussianError("covariance is not positive semi-definite")
        c.setflags(write=False)
        object.__setattr__(self, "covariance", c)

    @classmethod
    def random(cls, rng: np.random.Generator, cond: float = 50.0) -> "GaussianSource":
        """Random positive-definite source with condition number at most ``cond``."""
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        ev = np.exp(rng.uniform(0, np.log(cond), size=4))
        return cls(q @ np.diag(ev) @ q.T)

    def var(self, name: str) -> float:
        return float(self.covariance[_IX[name], _IX[name]])


def _cond_var(cov: np.ndarray, i: int, given: list[int]) -> float:
    if not given:
        return float(cov[i, i])
    g = cov[np.ix_(given, given)]
    if np.linalg.cond(g) > 1e12:
        raise GaussianError("singular conditioning block")
    c = cov[i, given]
    return float(cov[i, i] - c @ np.linalg.solve(g, c))


def conditional_variance(src: GaussianSource, target: str, given=()) -> float:
    return _cond_var(src.covariance, _IX[target], [_IX[n] for n in given])


def regression_alpha(src: GaussianSource, agent: str = "A", literal_alpha: bool = False) -> float:
    """Coefficient of the agent's public variable when regressing its private one.

    With ``literal_alpha`` the literal ratio cov(X, Y) / var(Y) is returned
    instead of the regression coefficient.
    """
    x, y, far = _ROLES[agent]
    c = src.covariance
    if literal_alpha:
        return float(c[_IX[x], _IX[y]] / c[_IX[y], _IX[y]])
    idx = [_IX[x], _IX[far]]
    g = c[np.ix_(idx, idx)]
    if np.linalg.cond(g) > 1e12:
        raise GaussianError("singular conditioning block")
    return float(np.linalg.solve(g, c[idx, _IX[y]])[0])


def _one_leakage(src: GaussianSource, D: float, agent: str, literal_alpha: bool) -> float:
    if not D > 0:
        raise GaussianError(f"distortion must be positive, got {D}")
    x, y, far = _ROLES[agent]
    D = min(D, conditional_variance(src, x, (far,)))  # beyond this the release is useless
    a = regression_alpha(src, agent, literal_alpha)
    resid = conditional_variance(src, y, (x, far))
    return 0.5 * np.log2(src.var(y) / (a * a * D + resid))


def closed_form_leakage(src: GaussianSource, D1: float, D2: float,
                        literal_alpha: bool = False) -> tuple[float, float]:
    """Minimal leakages (L1, L2) in bits at MSE distortions (D1, D2).

    L1 = 1/2 log2(var Y1 / (alpha^2 D1 + var(Y1 | X1, X2))) and symmetrically
    for L2.  Distortions above var(X1 | X2) are treated as var(X1 | X2).
    """
    return (_one_leakage(src, D1, "A", literal_alpha),
            _one_leakage(src, D2, "B", literal_alpha))


def test_channel(src: GaussianSource, Q: float, agent: str = "A") -> tuple[float, float]:
    """(D, L) for the release U = X + V, V ~ N(0, Q) independent.

    D is the MMSE of the agent's public variable from (U, far public data)
    and L = I(private; U, far public data).
    """
    if not Q > 0:
        raise GaussianError(f"noise variance must be positive, got {Q}")
    x, y, far = _ROLES[agent]
    c = src.covariance
    aug = np.zeros((5, 5))
    aug[:4, :4] = c
    aug[4, :4] = aug[:4, 4] = c[_IX[x]]
    aug[4, 4] = c[_IX[x], _IX[x]] + Q
    obs = [4, _IX[far]]
    D = _cond_var(aug, _IX[x], obs)
    L = 0.5 * np.log2(c[_IX[y], _IX[y]] / _cond_var(aug, _IX[y], obs))
    return D, float(L)


def solve_test_channel(src: GaussianSource, D_target: float, agent: str = "A") -> float:
    """Noise variance Q with D(Q) = D_target (to 1e-9), by root search in log Q."""
    x, _, far = _ROLES[agent]
    top = conditional_variance(src, x, (far,))
    if not 0 < D_target < top:
        raise GaussianError(f"target {D_target} outside (0, {top})")

    def f(t):
        return test_channel(src, float(np.exp(t)), agent)[0] - D_target

    lo, hi = np.log(D_target) - 5.0, np.log(D_target) + 5.0
    while f(lo) > 0:
        lo -= 10.0
    while f(hi) < 0:
        hi += 10.0
        if hi > 700:
            raise GaussianError("target too close to the no-information limit")
    t = brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(np.exp(t))


def markov_conditional_variance(src: GaussianSource) -> tuple[float, float]:
    """(var(Y1 | X1, X2), var(Y1 | X1)); equal iff Y1 - X1 - X2 holds."""
    return (conditional_variance(src, "Y1", ("X1", "X2")),
            conditional_variance(src, "Y1", ("X1",)))


def mutual_information_bits(src: GaussianSource, a, b) -> float:
    """I(a; b) for disjoint groups of variable names."""
    c = src.covariance
    ia, ib = [_IX[n] for n in a], [_IX[n] for n in b]
    det = lambda idx: np.linalg.det(c[np.ix_(idx, idx)])
    return float(0.5 * np.log2(det(ia) * det(ib) / det(ia + ib)))
