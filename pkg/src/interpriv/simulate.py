"""Monte Carlo check of single-letter leakage and distortion.

Each trial draws ``n`` i.i.d. source tuples, pushes them through the
schedule's channels symbol by symbol, and reports plug-in (empirical type)
estimates.  Randomness comes from NumPy's Philox-4x64 counter-based
generator keyed by ``SeedSequence([seed, trial])``, so trials are
independent of execution order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dist import Channel, DistortionFn, JointPmf
from .info import mutual_information
from .mechanism import (MechanismSchedule, PUBLIC, bayes_reconstruction, distortion, induce_joint,
                        leakage, observables, other, posterior_channel)

QUANTITIES = ("L1", "L2", "Lsum", "D1", "D2")


@dataclass(frozen=True)
class SimConfig:
    n: int
    seed: int = 0
    trials: int = 11

    def __post_init__(self):
        if self.n < 1 or self.trials < 1:
            raise ValueError("n and trials must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def _draw(rng: np.random.Generator, cdf: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling: one draw per entry of ``rows`` from cdf[rows]."""
    u = rng.random(len(rows))
    c = cdf[rows]
    return np.minimum((u[:, None] >= c).sum(axis=1), cdf.shape[1] - 1)


@dataclass(frozen=True)
class Estimate:
    exact: float
    mean: float
    stderr: float
    trials: tuple[float, ...] = field(repr=False)

    @property
    def error(self) -> float:
        return abs(self.mean - self.exact)


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    estimates: dict

    def __getitem__(self, key: str) -> Estimate:
        return self.estimates[key]

    def to_json(self) -> str:
        body = {"config": asdict(self.config),
                "units": {"L1": "bits", "L2": "bits", "Lsum": "bits",
                          "D1": "distortion", "D2": "distortion"},
                "estimates": {k: {"exact": e.exact, "mean": e.mean, "stderr": e.stderr,
                                  "trials": list(e.trials)}
                              for k, e in self.estimates.items()}}
        return json.dumps(body, indent=2, sort_keys=True, allow_nan=True)


def sample(source: JointPmf, sched: MechanismSchedule, n: int,
           rng: np.random.Generator) -> tuple[tuple[str, ...], np.ndarray]:
    """Draw ``n`` tuples of (source variables, U1..UK) as integer symbol indices."""
    names = list(source.names)
    flat = source.table.reshape(-1)
    idx = _draw(rng, np.cumsum(flat)[None], np.zeros(n, dtype=int))
    cols = list(np.unravel_index(idx, source.shape))
    sizes = list(source.shape)
    for ch in sched.rounds:
        pos = [names.index(s) for s in ch.scope]
        row = np.ravel_multi_index([cols[i] for i in pos], [sizes[i] for i in pos]) \
            if pos else np.zeros(n, dtype=int)
        cdf = np.cumsum(ch.rows.reshape(-1, ch.alphabet.size), axis=1)
        cols.append(_draw(rng, cdf, row))
        names.append(ch.name)
        sizes.append(ch.alphabet.size)
    return tuple(names), np.stack(cols, axis=1)


def empirical_joint(names, data: np.ndarray, template: JointPmf) -> JointPmf:
    sizes = [template.alphabet(n).size for n in names]
    counts = np.bincount(np.ravel_multi_index(data.T, sizes), minlength=int(np.prod(sizes)))
    return JointPmf(tuple((n, template.alphabet(n)) for n in names),
                    counts.reshape(sizes) / data.shape[0])


def _empirical_distortion(names, data, joint: JointPmf, agent: str, dfn, recon,
                          rng: np.random.Generator) -> float:
    x = PUBLIC[agent]
    if dfn is None or dfn.kind == "log-loss":
        recon = recon or posterior_channel(joint, x, observables(joint, other(agent)))
    elif recon is None:
        recon = bayes_reconstruction(joint, dfn, agent)
    cols = [names.index(s) for s in recon.scope]
    sizes = recon.rows.shape[:-1]
    row = np.ravel_multi_index(data[:, cols].T, sizes) if cols else np.zeros(len(data), dtype=int)
    probs = recon.rows.reshape(-1, recon.alphabet.size)
    xs = data[:, names.index(x)]
    if dfn is None or dfn.kind == "log-loss":
        with np.errstate(divide="ignore"):
            return float(np.mean(-np.log2(probs[row, xs])))
    xhat = _draw(rng, np.cumsum(probs, axis=1), row)
    return float(np.mean(dfn.table[xs, xhat]))


def run(source: JointPmf, sched: MechanismSchedule, cfg: SimConfig,
        dfns: tuple = (None, None), recons: tuple = (None, None)) -> SimReport:
    """Empirical leakage and distortion over ``cfg.trials`` independent trials.

    Leakages are plug-in mutual informations of the empirical joint type;
    distortions average d(x, xhat) with xhat drawn from the reconstruction
    (Bayes-optimal on the exact joint when none is given; the posterior under
    log-loss).
    """
    joint = induce_joint(source, sched)
    exact = {"L1": leakage(joint, "A"), "L2": leakage(joint, "B"),
             "D1": distortion(joint, "A", dfns[0], recons[0]),
             "D2": distortion(joint, "B", dfns[1], recons[1])}
    exact["Lsum"] = exact["L1"] + exact["L2"]
    per = {k: [] for k in QUANTITIES}
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        names, data = sample(source, sched, cfg.n, rng)
        emp = empirical_joint(names, data, joint)
        l1, l2 = leakage(emp, "A"), leakage(emp, "B")
        per["L1"].append(l1)
        per["L2"].append(l2)
        per["Lsum"].append(l1 + l2)
        for k, agent, i in (("D1", "A", 0), ("D2", "B", 1)):
            per[k].append(_empirical_distortion(names, data, joint, agent, dfns[i], recons[i], rng))
    est = {}
    for k in QUANTITIES:
        v = np.asarray(per[k])
        se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
        est[k] = Estimate(float(exact[k]), float(v.mean()), se, tuple(float(a) for a in v))
    return SimReport(cfg, est)


def plug_in_mi(names, data, template: JointPmf, a, b) -> float:
    return mutual_information(empirical_joint(names, data, template), a, b)
