"""Entropy and mutual information (bits) on :class:`JointPmf` values."""

from __future__ import annotations

import numpy as np

from .dist import JointPmf, PmfError, _as_names

CLAMP = 1e-12


def entropy_array(p, axis=None) -> np.ndarray | float:
    """-sum p log2 p with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


def binary_entropy(x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    out = entropy_array(np.stack([x, 1.0 - np.clip(x, 0.0, 1.0)]), axis=0)
    return float(out) if out.ndim == 0 else out


def _clamp(v: float) -> float:
    return 0.0 if abs(v) < CLAMP else float(v)


def _check(pmf: JointPmf, *groups) -> list[tuple[str, ...]]:
    out = [_as_names(g) for g in groups]
    seen: set[str] = set()
    for g in out:
        for n in g:
            if n not in pmf.names:
                raise PmfError(f"unknown variable {n!r}; have {pmf.names}")
        if seen & set(g):
            raise PmfError(f"variable sets overlap: {out}")
        seen |= set(g)
    return out


def _h(pmf: JointPmf, names) -> float:
    names = tuple(dict.fromkeys(names))
    if not names:
        return 0.0
    return float(entropy_array(pmf.array(names)))


def entropy(pmf: JointPmf, over) -> float:
    (over,) = _check(pmf, over)
    return _clamp(_h(pmf, over))


def conditional_entropy(pmf: JointPmf, target, given=()) -> float:
    target, given = _check(pmf, target, given)
    return _clamp(_h(pmf, target + given) - _h(pmf, given))


def mutual_information(pmf: JointPmf, a, b, given=()) -> float:
    a, b, given = _check(pmf, a, b, given)
    v = (_h(pmf, a + given) + _h(pmf, b + given)
         - _h(pmf, a + b + given) - _h(pmf, given))
    return _clamp(v)
