"""Finite-alphabet probability tables.

A :class:`JointPmf` is an n-way array with one named axis per random
variable.  A :class:`Channel` is a conditional pmf whose leading axes follow
its conditioning scope and whose last axis is the output symbol.  Both are
immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

SIMPLEX_TOL = 1e-9
ERASURE = "e"


class PmfError(ValueError):
    """Malformed probability table or inconsistent variable bookkeeping."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __init__(self, symbols: Iterable) -> None:
        syms = tuple(str(s) for s in symbols)
        if not syms:
            raise PmfError("alphabet must contain at least one symbol")
        if len(set(syms)) != len(syms):
            raise PmfError(f"duplicate symbols in alphabet {syms}")
        object.__setattr__(self, "symbols", syms)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise PmfError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None

    def __len__(self) -> int:
        return len(self.symbols)

    @classmethod
    def range(cls, n: int) -> "Alphabet":
        return cls(str(i) for i in range(n))


BINARY = Alphabet(("0", "1"))


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _as_names(names) -> tuple[str, ...]:
    if names is None:
        return ()
    if isinstance(names, str):
        return (names,)
    return tuple(names)


@dataclass(frozen=True)
class JointPmf:
    """Joint pmf over named finite variables.

    ``table`` has one axis per entry of ``variables`` in the same order.
    """

    variables: tuple[tuple[str, Alphabet], ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        variables = tuple((str(n), a if isinstance(a, Alphabet) else Alphabet(a))
                          for n, a in self.variables)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "table", _frozen(self.table))
        validate(self)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.table.shape

    def alphabet(self, name: str) -> Alphabet:
        for n, a in self.variables:
            if n == name:
                return a
        raise PmfError(f"unknown variable {name!r}; have {self.names}")

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise PmfError(f"unknown variable {name!r}; have {self.names}") from None

    def prob(self, **assignment) -> float:
        """Probability of a (partial) assignment given as ``name=symbol``."""
        sub = marginalize(self, assignment.keys())
        idx = tuple(sub.alphabet(n).index(assignment[n]) for n in sub.names)
        return float(sub.table[idx])

    def array(self, names: Sequence[str]) -> np.ndarray:
        """Marginal over ``names`` as a plain array with axes in that order."""
        names = _as_names(names)
        axes = [self.axis(n) for n in names]
        drop = tuple(i for i in range(len(self.names)) if i not in axes)
        marg = self.table.sum(axis=drop) if drop else self.table
        kept = sorted(axes)
        return np.transpose(marg, [kept.index(a) for a in axes])

    def __contains__(self, name: str) -> bool:
        return name in self.names


def validate(pmf: JointPmf) -> None:
    names = [n for n, _ in pmf.variables]
    if len(set(names)) != len(names):
        raise PmfError(f"duplicate variable names {names}")
    expected = tuple(a.size for _, a in pmf.variables)
    if pmf.table.shape != expected:
        raise PmfError(f"table shape {pmf.table.shape} does not match alphabets {expected}")
    if not np.all(np.isfinite(pmf.table)):
        raise PmfError("table has non-finite entries")
    if np.any(pmf.table < 0):
        raise PmfError(f"negative probability {pmf.table.min()}")
    total = pmf.table.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise PmfError(f"probabilities sum to {total!r}, not 1")


def marginalize(pmf: JointPmf, keep) -> JointPmf:
    keep = set(_as_names(keep))
    unknown = keep - set(pmf.names)
    if unknown:
        raise PmfError(f"unknown variables {sorted(unknown)}; have {pmf.names}")
    drop = tuple(i for i, n in enumerate(pmf.names) if n not in keep)
    variables = tuple(v for v in pmf.variables if v[0] in keep)
    table = pmf.table.sum(axis=drop) if drop else pmf.table
    return JointPmf(variables, table)


def condition(pmf: JointPmf, given: Mapping[str, object]) -> JointPmf:
    """Slice on ``given`` (name -> symbol) and renormalize."""
    index: list = [slice(None)] * len(pmf.names)
    for name, sym in given.items():
        index[pmf.axis(name)] = pmf.alphabet(name).index(sym)
    sliced = pmf.table[tuple(index)]
    mass = sliced.sum()
    if mass <= 0:
        raise PmfError(f"conditioning on zero-probability event {dict(given)}")
    variables = tuple(v for v in pmf.variables if v[0] not in given)
    return JointPmf(variables, sliced / mass)


def align(arr: np.ndarray, arr_names: Sequence[str], target_names: Sequence[str]) -> np.ndarray:
    """Transpose/reshape ``arr`` so it broadcasts against an array laid out as ``target_names``."""
    order = sorted(range(len(arr_names)), key=lambda i: list(target_names).index(arr_names[i]))
    moved = np.transpose(arr, order)
    present = {arr_names[i] for i in order}
    shape = []
    it = iter(moved.shape)
    for n in target_names:
        shape.append(next(it) if n in present else 1)
    return moved.reshape(shape)


@dataclass(frozen=True)
class Channel:
    """Conditional pmf P(output | scope).

    ``rows`` has shape ``(|scope_1|, ..., |scope_m|, |output|)``.
    """

    scope: tuple[str, ...]
    output: tuple[str, Alphabet]
    rows: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        scope = _as_names(self.scope)
        name, alph = self.output
        alph = alph if isinstance(alph, Alphabet) else Alphabet(alph)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "output", (str(name), alph))
        rows = _frozen(self.rows)
        object.__setattr__(self, "rows", rows)
        if rows.ndim != len(scope) + 1 or rows.shape[-1] != alph.size:
            raise PmfError(
                f"channel rows shape {rows.shape} inconsistent with scope {scope} "
                f"and output size {alph.size}")
        if len(set(scope)) != len(scope) or name in scope:
            raise PmfError(f"channel scope {scope} repeats a variable or contains the output")
        if np.any(rows < 0) or not np.all(np.isfinite(rows)):
            raise PmfError("channel has negative or non-finite entries")
        if np.any(np.abs(rows.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
            raise PmfError("channel rows must each sum to 1")

    @property
    def name(self) -> str:
        return self.output[0]

    @property
    def alphabet(self) -> Alphabet:
        return self.output[1]

    @classmethod
    def constant(cls, scope_alphabets: Sequence[tuple[str, Alphabet]], name: str,
                 symbol: str = "0") -> "Channel":
        shape = tuple(a.size for _, a in scope_alphabets)
        return cls(tuple(n for n, _ in scope_alphabets), (name, Alphabet([symbol])),
                   np.ones(shape + (1,)))

    @classmethod
    def deterministic(cls, scope_alphabets: Sequence[tuple[str, Alphabet]], name: str,
                      alphabet: Alphabet, fn) -> "Channel":
        """Channel putting all mass on ``fn(*scope_symbols)``."""
        shape = tuple(a.size for _, a in scope_alphabets)
        rows = np.zeros(shape + (alphabet.size,))
        for idx in np.ndindex(*shape):
            syms = [a.symbols[i] for (_, a), i in zip(scope_alphabets, idx)]
            rows[idx + (alphabet.index(fn(*syms)),)] = 1.0
        return cls(tuple(n for n, _ in scope_alphabets), (name, alphabet), rows)


def extend(pmf: JointPmf, ch: Channel) -> JointPmf:
    """Attach ``ch``'s output as a new variable: P(old, u) = P(old) ch(u | scope)."""
    if ch.name in pmf.names:
        raise PmfError(f"output name {ch.name!r} already in joint")
    missing = set(ch.scope) - set(pmf.names)
    if missing:
        raise PmfError(f"channel scope {sorted(missing)} not in joint {pmf.names}")
    for n, size in zip(ch.scope, ch.rows.shape):
        if pmf.alphabet(n).size != size:
            raise PmfError(f"channel expects |{n}|={size}, joint has {pmf.alphabet(n).size}")
    out_names = pmf.names + (ch.name,)
    rows = align(ch.rows, ch.scope + (ch.name,), out_names)
    table = pmf.table[..., None] * rows
    return JointPmf(pmf.variables + (ch.output,), table)


def make_dsbs(p: float, names: tuple[str, str] = ("X1", "X2")) -> JointPmf:
    if not 0.0 <= p <= 1.0:
        raise PmfError(f"DSBS parameter {p} outside [0, 1]")
    table = np.array([[1 - p, p], [p, 1 - p]]) / 2.0
    return JointPmf(((names[0], BINARY), (names[1], BINARY)), table)


def bsc(scope_name: str, name: str, crossover: float) -> Channel:
    if not 0.0 <= crossover <= 1.0:
        raise PmfError(f"crossover {crossover} outside [0, 1]")
    e = crossover
    return Channel((scope_name,), (name, BINARY), [[1 - e, e], [e, 1 - e]])


def add_binary_noise(pmf: JointPmf, on: str, r: float, as_: str) -> JointPmf:
    """New variable ``as_`` = ``on`` XOR Ber(r)."""
    if pmf.alphabet(on).size != 2:
        raise PmfError(f"{on!r} is not binary")
    ch = Channel((on,), (as_, pmf.alphabet(on)), bsc(on, as_, r).rows)
    return extend(pmf, ch)


def from_counts(counts, smoothing: float = 0.0,
                variables: Sequence[tuple[str, Alphabet]] | None = None) -> JointPmf:
    counts = np.asarray(counts, dtype=float)
    if smoothing < 0:
        raise PmfError("smoothing must be nonnegative")
    if np.any(counts < 0):
        raise PmfError("counts must be nonnegative")
    total = counts + smoothing
    if total.sum() <= 0:
        raise PmfError("all-zero counts with zero smoothing")
    if variables is None:
        variables = tuple((f"V{i}", Alphabet.range(s)) for i, s in enumerate(counts.shape))
    return JointPmf(tuple(variables), total / total.sum())


def product(*pmfs: JointPmf) -> JointPmf:
    """Independent product of joints over disjoint variables."""
    out = pmfs[0]
    for other in pmfs[1:]:
        table = np.multiply.outer(out.table, other.table)
        out = JointPmf(out.variables + other.variables, table)
    return out


@dataclass(frozen=True)
class DistortionFn:
    """Per-symbol distortion ``d(x, xhat)``.

    ``kind="table"`` carries a ``|X| x |Xhat|`` matrix (``inf`` allowed);
    ``kind="log-loss"`` scores a soft reconstruction ``q`` by ``-log2 q(x)``.
    """

    kind: str
    table: np.ndarray | None = field(default=None, repr=False)
    reproduction: Alphabet | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("table", "log-loss"):
            raise PmfError(f"unknown distortion kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None or self.reproduction is None:
                raise PmfError("table distortion needs a matrix and reproduction alphabet")
            t = _frozen(self.table)
            if np.any(np.isnan(t)) or np.any(t < 0):
                raise PmfError("distortion entries must be nonnegative or +inf")
            if t.shape[1] != self.reproduction.size:
                raise PmfError("distortion matrix width does not match reproduction alphabet")
            object.__setattr__(self, "table", t)

    @classmethod
    def log_loss(cls) -> "DistortionFn":
        return cls("log-loss")

    @classmethod
    def erasure(cls) -> "DistortionFn":
        """0 for a correct bit, 1 for an erasure, +inf for a flipped bit."""
        inf = np.inf
        return cls("table", np.array([[0.0, 1.0, inf], [inf, 1.0, 0.0]]),
                   Alphabet(("0", ERASURE, "1")))

    @classmethod
    def hamming(cls, alphabet: Alphabet) -> "DistortionFn":
        return cls("table", 1.0 - np.eye(alphabet.size), alphabet)
