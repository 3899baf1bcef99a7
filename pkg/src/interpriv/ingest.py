"""Categorical CSV data to an empirical (X1, Y1, X2, Y2) joint.

Schema files are JSON::

    {
      "delimiter": ",",                  # optional, default ","
      "na_values": ["?", ""],            # optional; cells treated as missing
      "drop_na": true,                   # optional; skip rows with a missing referenced cell
      "variables": {
        "X1": [{"column": "age", "rule": {"edges": [17, 25, 35, 91]}},
               {"column": "sex", "rule": "identity", "levels": ["Female", "Male"]}],
        "Y1": [{"column": "workclass",
                "rule": {"groups": {"private": ["Private"], "gov": ["State-gov", "Federal-gov"]}}}],
        ...
      }
    }

Bucketing rules:

* ``"identity"`` -- the cell value itself; ``levels`` fixes the alphabet and
  its order, otherwise the sorted set of observed values is used.
* ``{"groups": {label: [values]}}`` -- value-set grouping; labels keep their
  listed order.
* ``{"edges": [e0, ..., ek], "labels": [...]}`` -- numeric bins
  [e0, e1), ..., [e_{k-1}, e_k]; values outside [e0, ek] are errors.

Composite variables take the product alphabet of their columns, with symbols
joined by ``"|"``.
"""

from __future__ import annotations

import bisect
import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .dist import Alphabet, JointPmf, from_counts
from .mechanism import SOURCE_VARS


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class Bucket:
    column: str
    kind: str                                  # identity | groups | edges
    levels: tuple[str, ...] | None = None
    groups: tuple[tuple[str, tuple[str, ...]], ...] = ()
    edges: tuple[float, ...] = ()

    @classmethod
    def parse(cls, spec: Mapping) -> "Bucket":
        col = spec["column"]
        rule = spec.get("rule", "identity")
        if rule == "identity":
            lv = spec.get("levels")
            return cls(col, "identity", tuple(map(str, lv)) if lv is not None else None)
        if "groups" in rule:
            g = tuple((str(k), tuple(map(str, v))) for k, v in rule["groups"].items())
            seen = [v for _, vs in g for v in vs]
            if len(seen) != len(set(seen)):
                raise IngestError(f"column {col!r}: a value appears in two groups")
            return cls(col, "groups", tuple(k for k, _ in g), g)
        if "edges" in rule:
            e = tuple(float(x) for x in rule["edges"])
            if len(e) < 2 or any(b <= a for a, b in zip(e, e[1:])):
                raise IngestError(f"column {col!r}: edges must be increasing, at least two")
            labels = rule.get("labels") or [f"[{a:g},{b:g})" for a, b in zip(e, e[1:])]
            if len(labels) != len(e) - 1:
                raise IngestError(f"column {col!r}: need {len(e) - 1} labels")
            return cls(col, "edges", tuple(map(str, labels)), edges=e)
        raise IngestError(f"column {col!r}: unknown rule {rule!r}")

    def apply(self, value: str) -> str:
        if self.kind == "identity":
            if self.levels is not None and value not in self.levels:
                raise IngestError(f"value {value!r} not among levels of {self.column!r}")
            return value
        if self.kind == "groups":
            for label, vals in self.groups:
                if value in vals:
                    return label
            raise IngestError(f"value {value!r} of {self.column!r} is in no group")
        try:
            v = float(value)
        except ValueError:
            raise IngestError(f"value {value!r} of {self.column!r} is not numeric") from None
        e = self.edges
        if not e[0] <= v <= e[-1]:
            raise IngestError(f"value {v:g} of {self.column!r} outside [{e[0]:g}, {e[-1]:g}]")
        return self.levels[min(bisect.bisect_right(e, v) - 1, len(e) - 2)]


@dataclass(frozen=True)
class SchemaMap:
    variables: dict = field(repr=False)        # name -> tuple[Bucket, ...]
    delimiter: str = ","
    na_values: tuple[str, ...] = ()
    drop_na: bool = False

    def __post_init__(self):
        if set(self.variables) != set(SOURCE_VARS):
            raise IngestError(f"schema must define exactly {SOURCE_VARS}, got {sorted(self.variables)}")
        cols = [b.column for v in SOURCE_VARS for b in self.variables[v]]
        if len(cols) != len(set(cols)):
            raise IngestError("a column is assigned to more than one variable")
        for v in SOURCE_VARS:
            if not self.variables[v]:
                raise IngestError(f"variable {v} has no columns")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SchemaMap":
        vars_ = {v: tuple(Bucket.parse(b) for b in d["variables"].get(v, ())) for v in d["variables"]}
        return cls(vars_, d.get("delimiter", ","), tuple(d.get("na_values", ())),
                   bool(d.get("drop_na", False)))

    @classmethod
    def load(cls, path) -> "SchemaMap":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise IngestError(f"bad schema file {path}: {e}") from e

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(b.column for v in SOURCE_VARS for b in self.variables[v])


@dataclass(frozen=True)
class IngestReport:
    accepted: int
    dropped: int
    counts: np.ndarray = field(repr=False)


def ingest_csv_report(path, schema: SchemaMap, smoothing: float = 0.0,
                      delimiter: str | None = None) -> tuple[JointPmf, IngestReport]:
    """Like :func:`ingest_csv`, also returning accepted/dropped row counts."""
    delim = delimiter or schema.delimiter
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise IngestError(f"cannot read {path}: {e}") from e
    records = []
    dropped = 0
    with fh:
        reader = csv.reader(fh, delimiter=delim)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path} is empty")
        header = [h.strip() for h in header]
        missing = [c for c in schema.columns if c not in header]
        if missing:
            raise IngestError(f"missing column(s) {missing} in {path}")
        pos = {c: header.index(c) for c in schema.columns}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            cells = {c: row[pos[c]].strip() for c in schema.columns}
            if schema.drop_na and any(v in schema.na_values for v in cells.values()):
                dropped += 1
                continue
            try:
                rec = tuple(tuple(b.apply(cells[b.column]) for b in schema.variables[v])
                            for v in SOURCE_VARS)
            except IngestError as e:
                raise IngestError(f"line {line}: {e}") from None
            records.append(rec)
    if not records:
        raise IngestError(f"{path} has no usable data rows")

    alphabets = []
    for i, v in enumerate(SOURCE_VARS):
        per_col = []
        for j, b in enumerate(schema.variables[v]):
            per_col.append(b.levels if b.levels is not None
                           else tuple(sorted({r[i][j] for r in records})))
        syms = ["|".join(c[k] for c, k in zip(per_col, idx))
                for idx in np.ndindex(*[len(c) for c in per_col])]
        alphabets.append((per_col, Alphabet(syms)))
    shape = [a.size for _, a in alphabets]
    counts = np.zeros(shape)
    for rec in records:
        idx = []
        for (per_col, _), val in zip(alphabets, rec):
            k = 0
            for levels, s in zip(per_col, val):
                k = k * len(levels) + levels.index(s)
            idx.append(k)
        counts[tuple(idx)] += 1
    pmf = from_counts(counts, smoothing, tuple(zip(SOURCE_VARS, (a for _, a in alphabets))))
    return pmf, IngestReport(len(records), dropped, counts)


def ingest_csv(path, schema: SchemaMap, smoothing: float = 0.0,
               delimiter: str | None = None) -> JointPmf:
    """Empirical joint of (X1, Y1, X2, Y2) with optional add-``smoothing`` counts."""
    return ingest_csv_report(path, schema, smoothing, delimiter)[0]


# ---------------------------------------------------------------------------
# shipped census-style example

def data_path(name: str) -> Path:
    return Path(str(resources.files("interpriv") / "data" / name))


def census_schema() -> SchemaMap:
    return SchemaMap.load(data_path("census_schema.json"))


def synthetic_census(n: int = 8000, seed: int = 1994) -> list[dict]:
    """Rows with census-like columns and plausible dependencies (not real data)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed])))
    races = ["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"]
    work = ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov", "Local-gov",
            "State-gov", "Without-pay", "Never-worked"]
    out = []
    for _ in range(n):
        sex = "Male" if rng.random() < 0.67 else "Female"
        age = int(np.clip(rng.gamma(6.0, 6.5) + 14, 17, 90))
        race = races[rng.choice(5, p=[0.85, 0.096, 0.032, 0.01, 0.012])]
        p_us = (0.95 if race in ("White", "Black") else 0.4) - (0.15 if age < 35 else 0.0)
        native = "United-States" if rng.random() < p_us else "Other"
        wp = np.array([0.70, 0.08, 0.03, 0.03, 0.065, 0.04, 0.003, 0.002])
        if age >= 45:
            wp[1:3] *= 3.0
        if sex == "Female":
            wp[3:6] *= 1.8
        if race == "Black":
            wp[3:6] *= 1.6
        if age < 22:
            wp[6:] *= 15
        wp /= wp.sum()
        wc = work[rng.choice(8, p=wp)]
        logit = -3.6 + 1.5 * (sex == "Male") + 0.07 * min(age - 17, 35) \
            + 0.8 * (wc in ("Self-emp-inc", "Federal-gov")) - 0.6 * (race != "White") \
            - 0.5 * (native != "United-States")
        income = ">50K" if rng.random() < 1 / (1 + np.exp(-logit)) else "<=50K"
        if rng.random() < 0.02:
            wc = "?"
        out.append({"age": age, "workclass": wc, "race": race, "sex": sex,
                    "native-country": native, "income": income})
    return out


def write_synthetic_census(path, n: int = 8000, seed: int = 1994) -> None:
    rows = synthetic_census(n, seed)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
