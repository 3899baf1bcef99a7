"""Mechanism synthesis.

Two routes to a low sum leakage:

* :func:`grid_oracle` -- brute force over a uniform simplex mesh of every
  channel row, followed by one local refinement pass.  Global on its mesh,
  practical only for tiny alphabets.
* :func:`merge_and_search` / :func:`algorithm1` -- greedy agglomerative
  merging of a deterministic release, one round at a time, with the
  receiver's side information folded into the objective.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .dist import Alphabet, Channel, JointPmf, PmfError, _as_names
from .info import CLAMP, entropy, entropy_array, mutual_information
from .mechanism import (PRIVATE, PUBLIC, SOURCE_VARS, InteractionBudget, MechanismSchedule,
                        TradeoffPoint, evaluate, induce_joint, other, round_name, speaker,
                        sum_leakage)

log = logging.getLogger(__name__)

DEFAULT_CAP = 5_000_000
TIE = 1e-12


class InfeasibleError(ValueError):
    """No candidate satisfies the utility/distortion constraints."""

    def __init__(self, msg: str, round_index: int | None = None):
        super().__init__(msg)
        self.round_index = round_index


class SearchSpaceError(ValueError):
    """The requested mesh exceeds the configured enumeration cap."""


@dataclass(frozen=True)
class SolveResult:
    schedule: MechanismSchedule
    point: TradeoffPoint
    objective: float
    trace: tuple = field(default=(), repr=False)
    resolution: tuple = ()            # coarse mesh step per round (grid_oracle only)


@dataclass(frozen=True)
class MergeResult:
    """Outcome of one merge-and-search run.

    ``channel[x, u]`` is the deterministic map from (flattened) input symbol
    to cluster; ``partition`` lists the input indices of each cluster.
    """

    channel: np.ndarray = field(repr=False)
    partition: tuple[tuple[int, ...], ...]
    objective: float
    utility: float
    trace: tuple[dict, ...] = field(default=(), repr=False)


# ---------------------------------------------------------------------------
# simplex meshes

def simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All points of the (dim-1)-simplex with coordinates in multiples of 1/steps.

    Rows are in lexicographic order of their integer compositions, with the
    vertex (1, 0, ..., 0) last.
    """
    if dim == 1:
        return np.ones((1, 1))
    pts = []
    for bars in itertools.combinations(range(steps + dim - 1), dim - 1):
        prev, comp = -1, []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(steps + dim - 2 - prev)
        pts.append(comp)
    return np.asarray(pts, dtype=float) / steps


def _local_offsets(dim: int, reach: int) -> np.ndarray:
    """Integer vectors with entries in [-reach, reach] summing to zero."""
    if dim == 1:
        return np.zeros((1, 1), dtype=int)
    rng = range(-reach, reach + 1)
    out = [v + (-sum(v),) for v in itertools.product(rng, repeat=dim - 1) if abs(sum(v)) <= reach]
    return np.asarray(out, dtype=int)


def default_resolution(card: int) -> float:
    return {1: 1.0, 2: 1 / 16, 3: 1 / 8}.get(card, 1 / 4)


# ---------------------------------------------------------------------------
# batched evaluation of candidate schedules

class _Evaluator:
    """Sum leakage and constraint values for batches of candidate schedules.

    Joint axes: 0 = batch, 1..4 = X1, Y1, X2, Y2, then U1..UK.
    """

    AX = {"X1": 1, "Y1": 2, "X2": 3, "Y2": 4}

    def __init__(self, source: JointPmf, initiator: str, budget: InteractionBudget):
        self.src = source.array(SOURCE_VARS)[None]
        self.initiator = initiator
        self.budget = budget

    def joint(self, rows: Sequence[np.ndarray]) -> np.ndarray:
        """``rows[k]`` has shape (b or 1, |X_speaker|, |U1|, ..., |U_k|)."""
        j = self.src
        for k, r in enumerate(rows, start=1):
            s = PUBLIC[speaker(self.initiator, k)]
            shape = [r.shape[0], 1, 1, 1, 1] + list(r.shape[2:])
            shape[self.AX[s]] = r.shape[1]
            j = j[..., None] * r.reshape(shape)
        return j

    @staticmethod
    def _h(j: np.ndarray, keep: Sequence[int]) -> np.ndarray:
        drop = tuple(a for a in range(1, j.ndim) if a not in keep)
        m = j.sum(axis=drop) if drop else j
        return entropy_array(m.reshape(m.shape[0], -1), axis=1)

    def score(self, j: np.ndarray):
        """(objective, feasible mask, (L1, L2, D1, D2) arrays)."""
        us = list(range(5, j.ndim))
        ax = self.AX
        h_ux2 = self._h(j, us + [ax["X2"]])
        h_ux1 = self._h(j, us + [ax["X1"]])
        l1 = self._h(j, [ax["Y1"]]) + h_ux2 - self._h(j, us + [ax["X2"], ax["Y1"]])
        l2 = self._h(j, [ax["Y2"]]) + h_ux1 - self._h(j, us + [ax["X1"], ax["Y2"]])
        h_x1_given = self._h(j, us + [ax["X2"], ax["X1"]]) - h_ux2
        h_x2_given = self._h(j, us + [ax["X1"], ax["X2"]]) - h_ux1
        b = self.budget
        if b.taus is not None:
            t1, t2 = (tuple(b.taus) + (0.0, 0.0))[:2]
            u1 = self._h(j, [ax["X1"]]) - h_x1_given
            u2 = self._h(j, [ax["X2"]]) - h_x2_given
            feas = (u1 >= t1 - CLAMP) & (u2 >= t2 - CLAMP)
            d1, d2 = h_x1_given, h_x2_given
        else:
            d1 = self._distortion(j, "A", b.dfns[0], h_x1_given)
            d2 = self._distortion(j, "B", b.dfns[1], h_x2_given)
            feas = (d1 <= b.caps[0] + CLAMP) & (d2 <= b.caps[1] + CLAMP)
        return l1 + l2, feas, (l1, l2, d1, d2)

    def _distortion(self, j, agent, dfn, logloss):
        if dfn is None or dfn.kind == "log-loss":
            return logloss
        x = self.AX[PUBLIC[agent]]
        obs = list(range(5, j.ndim)) + [self.AX[PUBLIC[other(agent)]]]
        drop = tuple(a for a in range(1, j.ndim) if a not in obs + [x])
        m = j.sum(axis=drop)
        # move x to the end: (b, obs..., x)
        m = np.moveaxis(m, 1 + sorted(obs + [x]).index(x), -1)
        m = m.reshape(m.shape[0], -1, m.shape[-1])
        d = dfn.table
        finite = np.where(np.isinf(d), 0.0, d)
        risk = m @ finite                                   # b, obs, xhat
        blocked = (m > 0).astype(float) @ np.isinf(d).astype(float)
        risk = np.where(blocked > 0, np.inf, risk)
        return risk.min(axis=2).sum(axis=1)


def _round_rows_count(source: JointPmf, initiator: str, cards: Sequence[int], k: int) -> int:
    n = source.alphabet(PUBLIC[speaker(initiator, k)]).size
    for c in cards[:k - 1]:
        n *= c
    return n


def grid_oracle(source: JointPmf, K: int, cards: Sequence[int], budget: InteractionBudget,
                resolution: float | Sequence[float] | None = None, initiator: str = "A",
                cap: int = DEFAULT_CAP, refine: int = 4, chunk: int = 20_000) -> SolveResult:
    """Exhaustive minimization of sum leakage over a simplex mesh of channel rows.

    Every row of round ``k``'s channel ranges over the mesh of step
    ``resolution[k]`` on the ``cards[k]``-simplex.  The best feasible point is
    then refined once, round by round, on a mesh ``refine`` times finer
    within one coarse step of the incumbent.  With the default resolution,
    meshes over ``cap`` points are halved (1/16 to 1/8, ...) until they fit;
    an explicit resolution over the cap raises :class:`SearchSpaceError`.
    """
    cards = tuple(int(c) for c in cards)
    if len(cards) != K:
        raise ValueError(f"need {K} output cardinalities, got {cards}")
    auto = resolution is None
    if auto:
        resolution = [default_resolution(c) for c in cards]
    elif np.isscalar(resolution):
        resolution = [float(resolution)] * K
    steps = [max(1, int(round(1 / r))) for r in resolution]
    ev = _Evaluator(source, initiator, budget)
    trace: list[dict] = []

    nrows = [_round_rows_count(source, initiator, cards, k) for k in range(1, K + 1)]

    def mesh_total(steps):
        sizes = [comb(s + c - 1, c - 1) ** r for c, s, r in zip(cards, steps, nrows)]
        return int(np.prod(sizes, dtype=object)) if K else 1

    total = mesh_total(steps)
    while auto and total > cap and max(steps) > 1:
        steps = [max(1, s // 2) for s in steps]
        total = mesh_total(steps)
        log.info("default mesh over cap; coarsened to steps %s (%d points)", steps, total)
    if total > cap:
        raise SearchSpaceError(f"{total} mesh points exceed cap {cap}; coarsen the resolution")
    meshes = [simplex_grid(c, s) for c, s in zip(cards, steps)]

    def shaped(k: int, row_pts: np.ndarray) -> np.ndarray:
        # row_pts: (b, nrows, card) -> (b, |X_s|, |U1|, ..., |U_k|)
        lead = [source.alphabet(PUBLIC[speaker(initiator, k)]).size] + list(cards[:k - 1])
        return row_pts.reshape([row_pts.shape[0]] + lead + [cards[k - 1]])

    best_obj, best_rows = np.inf, None
    if K == 0:
        obj, feas, _ = ev.score(ev.joint([]))
        if feas[0]:
            best_obj, best_rows = float(obj[0]), []
    else:
        outer = [itertools.product(range(len(meshes[k])), repeat=nrows[k]) for k in range(K - 1)]
        last_combos = np.array(list(itertools.product(range(len(meshes[-1])), repeat=nrows[-1])))
        for prefix in itertools.product(*outer):
            fixed = [shaped(k + 1, meshes[k][list(idx)][None]) for k, idx in enumerate(prefix)]
            for start in range(0, len(last_combos), chunk):
                combos = last_combos[start:start + chunk]
                last = shaped(K, meshes[-1][combos])
                obj, feas, _ = ev.score(ev.joint(fixed + [last]))
                obj = np.where(feas, obj, np.inf)
                i = int(np.argmin(obj))
                if obj[i] < best_obj - TIE:
                    best_obj = float(obj[i])
                    best_rows = [f[0] for f in fixed] + [last[i]]
    trace.append({"stage": "mesh", "points": total, "best": best_obj})
    if best_rows is None:
        raise InfeasibleError("no mesh point satisfies the budget; relax it or refine the mesh")

    for k in range(1, K + 1):
        if refine <= 1:
            break
        c, h = cards[k - 1], 1.0 / steps[k - 1]
        offs = _local_offsets(c, refine) * (h / refine)
        inc = best_rows[k - 1].reshape(nrows[k - 1], c)
        per_row = []
        for r in range(nrows[k - 1]):
            cand = inc[r] + offs
            cand = cand[np.all(cand >= -1e-15, axis=1)]
            per_row.append(np.clip(cand, 0.0, 1.0))
        count = int(np.prod([len(p) for p in per_row], dtype=object))
        if count > cap:
            raise SearchSpaceError(f"refinement of round {k} needs {count} points > cap {cap}")
        idx = np.array(list(itertools.product(*[range(len(p)) for p in per_row])))
        fixed_before = [x[None] for x in best_rows[:k - 1]]
        fixed_after = [x[None] for x in best_rows[k:]]
        for start in range(0, len(idx), chunk):
            sel = idx[start:start + chunk]
            pts = np.stack([per_row[r][sel[:, r]] for r in range(nrows[k - 1])], axis=1)
            pts = pts / pts.sum(axis=2, keepdims=True)
            cand = shaped(k, pts)
            obj, feas, _ = ev.score(ev.joint(fixed_before + [cand] + fixed_after))
            obj = np.where(feas, obj, np.inf)
            i = int(np.argmin(obj))
            if obj[i] < best_obj - TIE:
                best_obj = float(obj[i])
                best_rows[k - 1] = cand[i]
        trace.append({"stage": f"refine round {k}", "points": count, "best": best_obj})

    sched = MechanismSchedule(initiator, tuple(
        Channel((PUBLIC[speaker(initiator, k)],) + tuple(round_name(j) for j in range(1, k)),
                (round_name(k), Alphabet.range(cards[k - 1])), best_rows[k - 1])
        for k in range(1, K + 1)))
    point = evaluate(source, sched, budget.dfns)
    return SolveResult(sched, point, point.sum_leakage, tuple(trace), tuple(1.0 / s for s in steps))


# ---------------------------------------------------------------------------
# agglomerative merging

def _g(rows: np.ndarray) -> np.ndarray:
    """Per-row -sum v log2 v over all trailing axes."""
    flat = rows.reshape(rows.shape[0], -1)
    return entropy_array(flat, axis=1)


def merge_core(P: np.ndarray, tau: float) -> MergeResult:
    """Greedy merging on a 3-way array ``P[x, y, z]``.

    Minimizes I(Y; U, Z) subject to I(X; U, Z) >= tau where U is a
    deterministic clustering of X, starting from U = X.
    """
    P = np.asarray(P, dtype=float)
    nx = P.shape[0]
    px = P.sum(axis=(1, 2))
    h_x = float(entropy_array(px))
    h_y = float(entropy_array(P.sum(axis=(0, 2))))
    h_xz = float(entropy_array(P.sum(axis=1)))
    if tau > h_x + CLAMP:
        raise InfeasibleError(f"tau={tau:.6g} exceeds I(X; X, Z) = H(X) = {h_x:.6g}")

    clusters: list[list[int]] = [[i] for i in range(nx)]
    A = P.copy()                         # cluster, y, z
    B = A.sum(axis=1)                    # cluster, z
    gA, gB = _g(A), _g(B)
    h_uz, h_yuz = float(gB.sum()), float(gA.sum())

    def utility():
        return h_x + h_uz - h_xz

    def objective():
        return h_y + h_uz - h_yuz

    trace = []
    while len(clusters) > 1:
        ii, jj = np.triu_indices(len(clusters), k=1)
        d_uz = _g(B[ii] + B[jj]) - gB[ii] - gB[jj]
        d_yuz = _g(A[ii] + A[jj]) - gA[ii] - gA[jj]
        reduction = d_yuz - d_uz          # drop in I(Y; U, Z)
        feasible = utility() + d_uz >= tau - CLAMP
        if not feasible.any():
            break
        red = np.where(feasible, reduction, -np.inf)
        best = red.max()
        pick = int(np.flatnonzero(red >= best - TIE)[0])
        i, j = int(ii[pick]), int(jj[pick])
        before = objective()
        A[i] += A[j]
        B[i] += B[j]
        gA[i], gB[i] = _g(A[i:i + 1])[0], _g(B[i:i + 1])[0]
        h_uz = float(gB.sum() - gB[j])
        h_yuz = float(gA.sum() - gA[j])
        A, B = np.delete(A, j, axis=0), np.delete(B, j, axis=0)
        gA, gB = np.delete(gA, j), np.delete(gB, j)
        clusters[i] = sorted(clusters[i] + clusters[j])
        del clusters[j]
        trace.append({"pair": (i, j), "objective_before": before,
                      "objective_after": objective(), "utility_after": utility(),
                      "clusters": len(clusters)})

    W = np.zeros((nx, len(clusters)))
    for u, members in enumerate(clusters):
        W[members, u] = 1.0
    return MergeResult(W, tuple(tuple(c) for c in clusters),
                       max(0.0, objective()), utility(), tuple(trace))


def _three_way(joint: JointPmf, x, y, z) -> np.ndarray:
    """Flatten ``joint`` into P[x, y, z] over composite groups (groups may share variables)."""
    x, y, z = _as_names(x), _as_names(y), _as_names(z)
    names = tuple(dict.fromkeys(x + y + z))
    arr = joint.array(names)
    sizes = {n: joint.alphabet(n).size for n in names}
    grids = np.indices(arr.shape).reshape(len(names), -1)
    pos = {n: grids[i] for i, n in enumerate(names)}

    def flat(group):
        idx = np.zeros(grids.shape[1], dtype=int)
        for n in group:
            idx = idx * sizes[n] + pos[n]
        return idx

    dims = [int(np.prod([sizes[n] for n in g])) for g in (x, y, z)]
    out = np.zeros(dims)
    np.add.at(out, (flat(x), flat(y), flat(z)), arr.reshape(-1))
    return out


def merge_and_search(source: JointPmf, tau: float, x="X", y="Y", z=("Z",)) -> MergeResult:
    """min I(Y; U, Z) s.t. I(X; U, Z) >= tau over clusterings U of X.

    ``x``, ``y``, ``z`` are variable names or tuples of names; ``z`` may be
    empty for the plain privacy funnel.
    """
    return merge_core(_three_way(source, x, y, z), tau)


def algorithm1(source: JointPmf, K: int, taus: Sequence[float], initiator: str = "A") -> SolveResult:
    """Round-by-round agglomerative solver for the interactive privacy funnel.

    Round ``k``'s speaker clusters (its public data, earlier releases) to
    minimize I(Y_speaker; receiver's public data, U_1..U_k) subject to
    I(X_speaker; U_k | receiver's public data, U_1..U_{k-1}) >= taus[k-1].
    """
    taus = [float(t) for t in taus]
    if len(taus) != K:
        raise ValueError(f"need {K} per-round thresholds, got {len(taus)}")
    if any(t < 0 for t in taus):
        raise ValueError("thresholds must be nonnegative")
    sched = MechanismSchedule(initiator, ())
    joint = induce_joint(source, sched)
    trace = []
    for k in range(1, K + 1):
        s = speaker(initiator, k)
        hist = tuple(round_name(j) for j in range(1, k))
        xin = (PUBLIC[s],) + hist
        side = (PUBLIC[other(s)],) + hist
        P = _three_way(joint, xin, PRIVATE[s], side)
        base = float(entropy_array(P.sum(axis=(1, 2)))) + float(entropy_array(P.sum(axis=(0, 1)))) \
            - float(entropy_array(P.sum(axis=1)))
        need = base + taus[k - 1]
        h_x = float(entropy_array(P.sum(axis=(1, 2))))
        if need > h_x + CLAMP:
            raise InfeasibleError(
                f"round {k}: threshold {taus[k - 1]:.6g} exceeds the available "
                f"H({PUBLIC[s]} | side information) = {h_x - base:.6g}", round_index=k)
        res = merge_core(P, need)
        shape = [joint.alphabet(n).size for n in xin] + [res.channel.shape[1]]
        ch = Channel(xin, (round_name(k), Alphabet.range(shape[-1])), res.channel.reshape(shape))
        sched = MechanismSchedule(initiator, sched.rounds + (ch,))
        joint = induce_joint(source, sched)
        trace.append({"round": k, "speaker": s, "tau": taus[k - 1], "merges": res.trace,
                      "clusters": res.partition})
    point = evaluate(source, sched)
    return SolveResult(sched, point, point.sum_leakage, tuple(trace))


# ---------------------------------------------------------------------------
# utility sweeps

def final_receiver_initiator(K: int, receiver: str = "B") -> str:
    """Initiator so that a K-round exchange ends at ``receiver``."""
    last_speaker = other(receiver)
    return last_speaker if K % 2 == 1 else other(last_speaker)


@dataclass(frozen=True)
class CurvePoint:
    rounds: int
    utility: float        # I(X_sender; everything at the receiver), bits
    distortion: float     # log-loss distortion at the receiver, bits
    leakage: float        # sum leakage, bits
    feasible: bool


def interaction_curve(source: JointPmf, utilities: Sequence[float], K: int,
                      receiver: str = "B", first_round_grid: int = 9) -> list[CurvePoint]:
    """Sum leakage vs end-to-end utility at ``receiver`` for K in {1, 2}.

    The utility demand applies to the sender's public data reconstructed at
    ``receiver``; the other direction carries no distortion demand.  For two
    rounds the opening round's threshold is searched over ``first_round_grid``
    levels between 0 and its maximum (0 reproduces the one-round mechanism).
    """
    if K not in (1, 2):
        raise ValueError("curves are produced for one or two rounds")
    sender = other(receiver)
    xs, xr = PUBLIC[sender], PUBLIC[receiver]
    init = final_receiver_initiator(K, receiver)
    floor = mutual_information(source, xs, xr)
    h_cond = entropy(source, (xs, xr)) - entropy(source, xr)
    h_xs = entropy(source, xs)
    if K == 2:
        h_open = entropy(source, (xr, xs)) - entropy(source, xs)
        openers = np.linspace(0.0, h_open, first_round_grid)
    out = []
    for u in utilities:
        need = max(0.0, float(u) - floor)
        if need > h_cond + CLAMP:
            out.append(CurvePoint(K, float(u), h_xs - float(u), float("inf"), False))
            continue
        need = min(need, h_cond)
        if K == 1:
            best = algorithm1(source, 1, [need], init).objective
        else:
            best = min(algorithm1(source, 2, [t, need], init).objective for t in openers)
        out.append(CurvePoint(K, float(u), h_xs - float(u), best, True))
    return out
