"""Command-line entry point: ``python -m interpriv <command> ...``.

Every command prints a small table and, with ``--out DIR``, writes
``DIR/<command>.json`` (results plus the run manifest without timing) and
``DIR/<command>.manifest.json`` (the manifest with wall-clock duration).
Re-running with the same arguments reproduces the results file byte for byte.
``sweep`` also writes ``DIR/sweep.csv`` with columns
``rounds,utility_bits,distortion_bits,leakage_bits``.

Exit codes: 0 success, 1 usage or parameter error, 2 infeasible budget,
3 I/O or input-data error.  ``INTERPRIV_WORKERS`` sets the process count for
parameter sweeps (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis, gaussian, ingest, simulate, solvers
from .dist import BINARY, Alphabet, Channel, DistortionFn, JointPmf, PmfError
from .info import entropy, mutual_information
from .mechanism import InteractionBudget, MechanismSchedule

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3
INF = float("inf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def workers() -> int:
    try:
        return max(1, int(os.environ.get("INTERPRIV_WORKERS", "1")))
    except ValueError:
        raise UsageError("INTERPRIV_WORKERS must be an integer") from None


def _pmap(fn, items):
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# serialization

def pmf_to_dict(p: JointPmf) -> dict:
    return {"variables": [[n, list(a.symbols)] for n, a in p.variables],
            "table": p.table.reshape(-1).tolist()}


def pmf_from_dict(d: dict) -> JointPmf:
    vars_ = tuple((n, Alphabet(s)) for n, s in d["variables"])
    return JointPmf(vars_, np.asarray(d["table"], float).reshape([a.size for _, a in vars_]))


def schedule_to_dict(s: MechanismSchedule) -> dict:
    return {"initiator": s.initiator,
            "rounds": [{"scope": list(ch.scope), "output": ch.name,
                        "alphabet": list(ch.alphabet.symbols),
                        "shape": list(ch.rows.shape), "rows": ch.rows.reshape(-1).tolist()}
                       for ch in s.rounds]}


def schedule_from_dict(d: dict) -> MechanismSchedule:
    rounds = tuple(Channel(tuple(r["scope"]), (r["output"], Alphabet(r["alphabet"])),
                           np.asarray(r["rows"], float).reshape(r["shape"])) for r in d["rounds"])
    return MechanismSchedule(d["initiator"], rounds)


def _kv(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(",")):
        if "=" not in part:
            raise UsageError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def random_binary_source(seed: int) -> JointPmf:
    rng = np.random.default_rng(seed)
    t = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)
    return JointPmf(tuple((n, BINARY) for n in ("X1", "Y1", "X2", "Y2")), t)


def load_source(spec: str, schema: str | None = None, smoothing: float = 0.0) -> JointPmf:
    """Source from a spec string.

    ``erasure:p=0.03[,r=..]``, ``chain:p=..,r=..,q=..``, ``random:seed=N``,
    ``census`` (shipped synthetic data), ``csv:PATH`` (needs ``--schema``) or
    ``pmf:PATH`` (JSON written by ``ingest``).
    """
    kind, _, rest = spec.partition(":")
    if kind == "erasure":
        a = _kv(rest)
        return analysis.erasure_source(float(a.get("p", 0.03)), float(a["r"]) if "r" in a else None)
    if kind == "chain":
        a = _kv(rest)
        return analysis.bsc_chain_source(float(a["p"]), float(a["r"]), float(a["q"]))
    if kind == "random":
        return random_binary_source(int(_kv(rest).get("seed", 0)))
    if kind == "census":
        return ingest.ingest_csv(ingest.data_path("census_synthetic.csv"), ingest.census_schema(),
                                 smoothing)
    if kind == "csv":
        if not schema:
            raise UsageError("csv sources need --schema")
        return ingest.ingest_csv(rest, ingest.SchemaMap.load(schema), smoothing)
    if kind == "pmf":
        return pmf_from_dict(json.loads(Path(rest).read_text(encoding="utf-8")))
    raise UsageError(f"unknown source kind {kind!r}")


def _point(pt) -> dict:
    return {"L1_bits": pt.L1, "L2_bits": pt.L2, "Lsum_bits": pt.sum_leakage,
            "D1": pt.D1, "D2": pt.D2}


def _table(rows) -> str:
    width = max(len(r) for r in rows)
    rows = [[str(c) if not isinstance(c, float) else f"{c:.6g}" for c in r] + [""] * (width - len(r))
            for r in rows]
    w = [max(len(r[i]) for r in rows) for i in range(width)]
    return "\n".join("  ".join(c.ljust(w[i]) for i, c in enumerate(r)).rstrip() for r in rows)


# ---------------------------------------------------------------------------
# commands: each returns (results dict, stdout table rows, extra files)

def cmd_oracle(a):
    src = load_source(a.source, a.schema, a.smoothing)
    cards = [int(c) for c in a.cards.split(",")] if a.cards else [2] * a.rounds
    res = solvers.grid_oracle(src, a.rounds, cards, InteractionBudget.log_loss(src, a.d1, a.d2),
                              a.resolution, a.initiator, a.cap)
    out = {"objective_bits": res.objective, "point": _point(res.point),
           "schedule": schedule_to_dict(res.schedule), "trace": list(res.trace)}
    return out, [["sum leakage (bits)", res.objective], ["D1 (bits)", res.point.D1],
                 ["D2 (bits)", res.point.D2]], {}


def cmd_funnel(a):
    src = load_source(a.source, a.schema, a.smoothing)
    taus = _floats(a.taus) if a.taus else [0.0] * a.rounds
    res = solvers.algorithm1(src, len(taus), taus, a.initiator)
    out = {"objective_bits": res.objective, "point": _point(res.point),
           "schedule": schedule_to_dict(res.schedule),
           "clusters": [[list(c) for c in t["clusters"]] for t in res.trace]}
    return out, [["sum leakage (bits)", res.objective], ["D1 (bits)", res.point.D1],
                 ["D2 (bits)", res.point.D2]], {}


def cmd_gaussian(a):
    if a.cov:
        v = _floats(a.cov)
        if len(v) != 16:
            raise UsageError("--cov needs 16 numbers (row-major 4x4 over X1,Y1,X2,Y2)")
        src = gaussian.GaussianSource(np.array(v).reshape(4, 4))
    else:
        src = gaussian.GaussianSource.random(np.random.default_rng(a.seed))
    out = {"covariance": src.covariance.tolist(), "literal_alpha": a.literal_alpha}
    rows = []
    if a.d1 is not None:
        l1, l2 = gaussian.closed_form_leakage(src, a.d1, a.d2 if a.d2 is not None else a.d1,
                                              a.literal_alpha)
        out.update(L1_bits=l1, L2_bits=l2)
        rows += [["L1 (bits)", l1], ["L2 (bits)", l2]]
    if a.check:
        worst = 0.0
        for q in np.logspace(-3, 3, a.points):
            d, l = gaussian.test_channel(src, float(q))
            worst = max(worst, abs(l - gaussian.closed_form_leakage(src, d, d, a.literal_alpha)[0]))
        out["max_abs_gap_bits"] = worst
        rows.append(["max |L(Q) - closed form| (bits)", worst])
    if not rows:
        raise UsageError("give --d1 and/or --check")
    return out, rows, {}


def cmd_erasure(a):
    out, rows = {"p": a.p}, []
    if a.d1 is not None:
        v = analysis.erasure_one_round(a.p, a.d1)
        out["one_round_bits"] = v
        rows.append([f"L^A_sum,1(D1={a.d1:g}) (bits)", v])
    if a.alpha is not None:
        for conv in ("crossover", "match"):
            r = analysis.two_round_erasure(a.p, a.alpha, a.beta, conv)
            one = analysis.erasure_one_round(a.p, r.d1)
            out[conv] = {"lsum2_bits": r.lsum2, "full_sum_bits": r.full_sum, "D1": r.d1,
                         "one_round_at_D1_bits": one}
            rows.append([f"{conv}: round-sum / full sum (bits)", r.lsum2, r.full_sum])
            rows.append([f"{conv}: D1 / one-round at D1", r.d1, one])
    if not rows:
        raise UsageError("give --d1 and/or --alpha/--beta")
    return out, rows, {}


def _witness(args):
    p, r, q, a20, a21 = args
    return analysis.concavity_witness(p, r, q, analysis.gamma_fn(p, q, r, a20, a21))


def cmd_benefit(a):
    b = analysis.bound_report(a.p, a.q, a.r, a.a20, a.a21)
    out = {"gamma_bits": b.gamma, "C_bits": b.C, "D_plus_Hr_bits": b.d_plus_hr,
           "C_exceeds_D_plus_Hr": b.C_exceeds}
    rows = [["gamma (bits)", b.gamma], ["C (bits)", b.C], ["D + H(r) (bits)", b.d_plus_hr]]
    if a.sweep:
        ps, rs = _floats(a.ps), _floats(a.rs)
        cells = sorted((p, r, a.q, a.a20, a.a21) for p in ps for r in rs)
        res = _pmap(_witness, cells)
        out["sweep"] = [{"p": w.p, "r": w.r, "D": w.D, "lhs_bits": w.lhs, "rhs_bits": w.rhs,
                         "slack_bits": w.slack, "violated": w.violated} for w in res]
        best = max(res, key=lambda w: w.margin)
        rows.append(["largest violation (bits) at (p, r)", best.margin, f"({best.p:g}, {best.r:g})"])
        rows.append(["violations found", sum(w.violated for w in res)])
    return out, rows, {}


def cmd_eta(a):
    src = load_source(a.source, a.schema, a.smoothing)
    rep = analysis.monotonicity_check(src, a.kmax, (a.d1, a.d2))
    top = entropy(src, "Y1") + entropy(src, "Y2")
    out = {"LA_bits": list(rep.LA), "LB_bits": list(rep.LB),
           "etaA_bits": [top - v for v in rep.LA], "etaB_bits": [top - v for v in rep.LB],
           "slack_bits": rep.slack, "violations": list(rep.violations)}
    rows = [["k", "L^A (bits)", "L^B (bits)"]] + [[k, x, y] for k, (x, y) in
                                                   enumerate(zip(rep.LA, rep.LB))]
    rows.append(["violations", len(rep.violations), ""])
    return out, rows, {}


def cmd_simulate(a):
    if a.schedule_file:
        sched = schedule_from_dict(json.loads(Path(a.schedule_file).read_text(encoding="utf-8")))
        src = load_source(a.source, a.schema, a.smoothing)
        dfns, recons = (None, None), (None, None)
    else:
        src = analysis.erasure_source(a.p)
        sched = analysis.two_round_erasure_schedule(a.alpha, a.beta)
        dfns = (DistortionFn.erasure(), None)
        recons = (analysis.identity_reconstruction(), None)
    rep = simulate.run(src, sched, simulate.SimConfig(a.n, a.seed, a.trials), dfns, recons)
    out = json.loads(rep.to_json())
    rows = [["quantity", "exact", "mean", "stderr"]] + [
        [k, rep[k].exact, rep[k].mean, rep[k].stderr] for k in simulate.QUANTITIES]
    return out, rows, {}


def cmd_ingest(a):
    schema = ingest.census_schema() if a.schema is None else ingest.SchemaMap.load(a.schema)
    path = a.csv or ingest.data_path("census_synthetic.csv")
    pmf, rep = ingest.ingest_csv_report(path, schema, a.smoothing, a.delimiter)
    out = {"pmf": pmf_to_dict(pmf), "accepted_rows": rep.accepted, "dropped_rows": rep.dropped}
    rows = [["accepted rows", rep.accepted], ["dropped rows", rep.dropped],
            ["shape", "x".join(map(str, pmf.shape))]]
    for n in pmf.names:
        rows.append([f"H({n}) (bits)", entropy(pmf, n)])
    if a.pmf_out:
        Path(a.pmf_out).write_text(json.dumps(pmf_to_dict(pmf), sort_keys=True) + "\n",
                                   encoding="utf-8")
    return out, rows, {}


def _curve(args):
    src, us, k, grid = args
    return solvers.interaction_curve(src, us, k, "B", grid)


def cmd_sweep(a):
    src = load_source(a.source, a.schema, a.smoothing)
    lo = mutual_information(src, "X1", "X2")
    hi = entropy(src, "X1")
    us = list(np.linspace(lo, hi, a.points))
    ks = sorted(int(k) for k in a.rounds.split(","))
    curves = _pmap(_curve, [(src, us, k, a.opener_grid) for k in ks])
    lines = ["rounds,utility_bits,distortion_bits,leakage_bits"]
    out = {"curves": []}
    for k, c in zip(ks, curves):
        for pt in c:
            lines.append(f"{k},{pt.utility!r},{pt.distortion!r},{pt.leakage!r}")
            out["curves"].append({"rounds": k, "utility_bits": pt.utility,
                                  "distortion_bits": pt.distortion, "leakage_bits": pt.leakage})
    rows = [["utility (bits)"] + [f"L (bits), K={k}" for k in ks]]
    for i, u in enumerate(us):
        rows.append([u] + [c[i].leakage for c in curves])
    return out, rows, {"sweep.csv": "\n".join(lines) + "\n"}


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="interpriv", description="Interactive privacy leakage-distortion tools.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, source=True):
        p.add_argument("--out", help="directory for the results and manifest files")
        if source:
            p.add_argument("--source", default="erasure:p=0.03",
                           help="erasure:p=..|chain:p=..,r=..,q=..|random:seed=..|census|csv:PATH|pmf:PATH")
            p.add_argument("--schema", help="schema JSON for csv sources")
            p.add_argument("--smoothing", type=float, default=0.0, help="add-lambda count smoothing")

    p = sub.add_parser("oracle", help="grid search for the minimal sum leakage")
    common(p)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--cards", help="output cardinalities, comma separated")
    p.add_argument("--d1", type=float, default=INF, help="log-loss distortion at B of X1 (bits)")
    p.add_argument("--d2", type=float, default=INF, help="log-loss distortion at A of X2 (bits)")
    p.add_argument("--initiator", choices="AB", default="A")
    p.add_argument("--resolution", type=float, help="mesh step (default 1/16 binary, coarser above)")
    p.add_argument("--cap", type=int, default=solvers.DEFAULT_CAP, help="max mesh points")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("funnel", help="agglomerative round-by-round solver")
    common(p)
    p.add_argument("--taus", help="per-round thresholds in bits, comma separated")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--initiator", choices="AB", default="A")
    p.set_defaults(fn=cmd_funnel)

    p = sub.add_parser("gaussian", help="Gaussian closed form and test channel")
    common(p, source=False)
    p.add_argument("--cov", help="16 comma-separated covariance entries")
    p.add_argument("--seed", type=int, default=0, help="seed for a random covariance")
    p.add_argument("--d1", type=float)
    p.add_argument("--d2", type=float)
    p.add_argument("--check", action="store_true", help="compare test channel with closed form")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--literal-alpha", action="store_true",
                   help="use alpha = cov(X1,Y1)/var(Y1) instead of the regression coefficient")
    p.set_defaults(fn=cmd_gaussian)

    p = sub.add_parser("erasure", help="binary erasure example")
    common(p, source=False)
    p.add_argument("--p", type=float, default=0.03)
    p.add_argument("--d1", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, default=0.55)
    p.set_defaults(fn=cmd_erasure)

    p = sub.add_parser("benefit", help="gamma/C bounds and the concavity witness sweep")
    common(p, source=False)
    for n, d in (("p", 0.7), ("q", 0.48), ("r", 0.23), ("a20", 0.1), ("a21", 0.6)):
        p.add_argument(f"--{n}", type=float, default=d)
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--ps", default="0.6,0.7,0.79,0.9")
    p.add_argument("--rs", default="0.1,0.23,0.35,0.52")
    p.set_defaults(fn=cmd_benefit)

    p = sub.add_parser("eta", help="oracle monotonicity report over rounds")
    common(p)
    p.add_argument("--kmax", type=int, default=2)
    p.add_argument("--d1", type=float, default=INF)
    p.add_argument("--d2", type=float, default=INF)
    p.set_defaults(fn=cmd_eta)

    p = sub.add_parser("simulate", help="Monte Carlo check of a schedule")
    common(p)
    p.add_argument("--schedule-file", help="schedule JSON; default is the two-round erasure example")
    p.add_argument("--p", type=float, default=0.03)
    p.add_argument("--alpha", type=float, default=0.35)
    p.add_argument("--beta", type=float, default=0.55)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=11)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ingest", help="CSV to empirical joint")
    common(p, source=False)
    p.add_argument("--csv", help="input file (default: shipped synthetic census data)")
    p.add_argument("--schema", help="schema JSON (default: shipped census schema)")
    p.add_argument("--delimiter")
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--pmf-out", help="also write the joint as JSON to this path")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("sweep", help="sum leakage vs utility curves for 1 and 2 rounds")
    common(p)
    p.add_argument("--rounds", default="1,2")
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--opener-grid", type=int, default=9,
                   help="threshold levels tried for the opening round of two-round runs")
    p.set_defaults(fn=cmd_sweep, source="census")
    return ap


@dataclass(frozen=True)
class RunManifest:
    """What produced a results file.  Timing lives only in the manifest file,
    so results files are byte-identical across reruns."""

    command: str
    parameters: dict
    version: str
    seed: int | None
    outputs: tuple[str, ...]
    wall_clock_seconds: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["outputs"] = list(self.outputs)
        if not timing:
            del d["wall_clock_seconds"]
        return d


def run(argv=None) -> int:
    try:
        ap = build_parser()
        a = ap.parse_args(argv)
        if not a.command:
            raise UsageError(ap.format_usage().strip())
        params = {k: v for k, v in sorted(vars(a).items()) if k not in ("fn", "out")}
        t0 = time.perf_counter()
        results, rows, extra = a.fn(a)
        elapsed = time.perf_counter() - t0
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except solvers.InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ingest.IngestError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, PmfError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(_table(rows))
    if a.out:
        try:
            outdir = Path(a.out)
            outdir.mkdir(parents=True, exist_ok=True)
            manifest = RunManifest(a.command, params, __version__, params.get("seed"),
                                   tuple(sorted([f"{a.command}.json", f"{a.command}.manifest.json"]
                                                + list(extra))), elapsed)
            body = {"manifest": manifest.to_dict(timing=False),
                    "manifest_file": f"{a.command}.manifest.json", "results": results}
            (outdir / f"{a.command}.json").write_text(
                json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
            (outdir / f"{a.command}.manifest.json").write_text(
                json.dumps(manifest.to_dict(), indent=2, sort_keys=True,
                           default=_jsonable) + "\n", encoding="utf-8")
            for name, text in extra.items():
                (outdir / name).write_text(text, encoding="utf-8")
        except OSError as e:
            print(f"output error: {e}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def main() -> None:
    sys.exit(run())
