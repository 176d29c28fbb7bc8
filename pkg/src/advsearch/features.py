"""Quantile bucketization and one-hot encoding of tabular examples.

Every numeric feature is cut into (at most) ``n_buckets`` buckets at the
training quantiles.  Buckets are right-open: a value equal to a cut point
falls into the upper bucket.  Each app in the vocabulary takes two one-hot
bits, ``(used, unused)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

APP_DELIMITER = "|"


class EncodingError(ValueError):
    pass


class CsvError(ValueError):
    pass


def fit_buckets(column: Sequence[float], n: int) -> np.ndarray:
    """Cut points at the ``k/n`` quantiles (linear interpolation), ``k = 1..n-1``.

    Tied quantiles collapse into one cut point, and cut points at or below the
    column minimum are dropped since they would only bound an empty bucket.
    """
    if n < 2:
        raise ValueError(f"need at least 2 buckets, got {n}")
    col = np.asarray(column, dtype=float)
    if col.size == 0:
        raise ValueError("cannot fit buckets on an empty column")
    if not np.all(np.isfinite(col)):
        raise ValueError("column contains non-finite values")
    cuts = np.quantile(col, np.arange(1, n) / n, method="linear")
    cuts = np.unique(cuts)
    return cuts[cuts > col.min()]


@dataclass(frozen=True)
class Interval:
    """Bucket ``[low, high)``; infinite ends mark the extreme buckets."""

    low: float
    high: float

    def contains(self, value: float) -> bool:
        return self.low <= value < self.high


def _fmt(v: float) -> str:
    return str(float(round(v, 6)))


@dataclass(frozen=True, eq=False)
class FeatureEncoder:
    features: tuple[str, ...]
    boundaries: Mapping[str, np.ndarray]
    ranges: Mapping[str, tuple[float, float]]
    apps: tuple[str, ...] = ()
    n_buckets: int = 20
    app_column: Optional[str] = "apps"
    _offsets: dict = field(init=False, repr=False)

    def __post_init__(self):
        bounds = {}
        for name in self.features:
            b = np.asarray(self.boundaries[name], dtype=float)
            if b.size > 1 and not np.all(np.diff(b) > 0):
                raise EncodingError(f"boundaries of {name!r} are not strictly increasing")
            b.setflags(write=False)
            bounds[name] = b
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "apps", tuple(self.apps))
        object.__setattr__(self, "boundaries", bounds)
        offsets, pos = {}, 0
        for name in self.features:
            offsets[name] = pos
            pos += bounds[name].size + 1
        offsets["__apps__"] = pos
        object.__setattr__(self, "_offsets", offsets)

    def buckets_of(self, name: str) -> int:
        """Effective bucket count of a feature (ties may lower it)."""
        return self.boundaries[name].size + 1

    @property
    def width(self) -> int:
        return self._offsets["__apps__"] + 2 * len(self.apps)

    def onehot_names(self) -> list[str]:
        names = [f"{f}[{k}]" for f in self.features for k in range(self.buckets_of(f))]
        for app in self.apps:
            names += [f"app:{app}:used", f"app:{app}:unused"]
        return names

    def bucket(self, name: str, value: float) -> int:
        return int(np.searchsorted(self.boundaries[name], value, side="right"))

    def interval(self, name: str, k: int) -> Interval:
        b = self.boundaries[name]
        if not 0 <= k <= b.size:
            raise EncodingError(f"bucket {k} out of range for {name!r} ({b.size + 1} buckets)")
        low = -math.inf if k == 0 else float(b[k - 1])
        high = math.inf if k == b.size else float(b[k])
        return Interval(low, high)

    def render_interval(self, name: str, k: int) -> str:
        iv = self.interval(name, k)
        lo, hi = self.ranges[name]
        top = _fmt(hi if math.isinf(iv.high) else iv.high)
        if math.isinf(iv.low):
            return f"[{_fmt(lo)}, {top}]"
        return f"({_fmt(iv.low)}, {top}]"

    def encode(self, row: Mapping) -> "BucketedExample":
        buckets = []
        raw = []
        for name in self.features:
            if name not in row:
                raise EncodingError(f"row is missing feature {name!r}")
            v = float(row[name])
            raw.append(v)
            buckets.append(self.bucket(name, v))
        used = frozenset(row.get(self.app_column, ())) if self.app_column else frozenset()
        unknown = used - set(self.apps)
        if unknown:
            raise EncodingError(f"unknown apps {sorted(unknown)}")
        bits = tuple(app in used for app in self.apps)
        return BucketedExample(tuple(buckets), bits, tuple(raw), self)

    def onehot(self, x: "BucketedExample") -> np.ndarray:
        vec = np.zeros(self.width)
        for name, k in zip(self.features, x.buckets):
            vec[self._offsets[name] + k] = 1.0
        base = self._offsets["__apps__"]
        for j, used in enumerate(x.app_bits):
            vec[base + 2 * j + (0 if used else 1)] = 1.0
        return vec

    def decode(self, x: "BucketedExample") -> dict:
        out = {name: self.interval(name, k) for name, k in zip(self.features, x.buckets)}
        out["apps"] = frozenset(a for a, used in zip(self.apps, x.app_bits) if used)
        return out

    def describe(self, x: "BucketedExample") -> dict:
        """Human-readable intervals, as strings."""
        out = {name: self.render_interval(name, k) for name, k in zip(self.features, x.buckets)}
        out["apps"] = sorted(a for a, used in zip(self.apps, x.app_bits) if used)
        return out

    def to_dict(self) -> dict:
        return {
            "n_buckets": self.n_buckets,
            "features": list(self.features),
            "boundaries": {f: self.boundaries[f].tolist() for f in self.features},
            "ranges": {f: list(self.ranges[f]) for f in self.features},
            "apps": list(self.apps),
            "app_column": self.app_column,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeatureEncoder":
        feats = tuple(data["features"])
        return cls(feats, {f: data["boundaries"][f] for f in feats},
                   {f: tuple(data["ranges"][f]) for f in feats},
                   tuple(data.get("apps", ())), int(data.get("n_buckets", 20)),
                   data.get("app_column", "apps"))

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FeatureEncoder":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class BucketedExample:
    """Bucket index per numeric feature plus one used/unused flag per app.

    ``raw`` optionally carries the underlying feature values, which the
    dollar-cost graph needs to price a move.
    """

    buckets: tuple[int, ...]
    app_bits: tuple[bool, ...] = ()
    raw: Optional[tuple[float, ...]] = None
    encoder: Optional[FeatureEncoder] = field(default=None, compare=False, repr=False)

    def key(self) -> bytes:
        parts = [",".join(map(str, self.buckets)), "".join("1" if b else "0" for b in self.app_bits)]
        if self.raw is not None:
            parts.append(",".join(repr(round(v, 9)) for v in self.raw))
        return "|".join(parts).encode()

    def onehot(self) -> np.ndarray:
        return self.encoder.onehot(self)

    def __str__(self) -> str:
        apps = "".join("1" if b else "0" for b in self.app_bits)
        return f"buckets={list(self.buckets)} apps={apps}"


def fit_encoder(rows: Sequence[Mapping], features: Sequence[str], n_buckets: int = 20,
                apps: Optional[Sequence[str]] = None,
                app_column: Optional[str] = "apps") -> FeatureEncoder:
    """Fit bucket boundaries on ``rows``; the app vocabulary defaults to all apps seen."""
    if not rows:
        raise ValueError("no rows to fit on")
    boundaries, ranges = {}, {}
    for name in features:
        col = np.array([float(r[name]) for r in rows])
        boundaries[name] = fit_buckets(col, n_buckets)
        ranges[name] = (float(col.min()), float(col.max()))
    if apps is None:
        seen = set()
        if app_column:
            for r in rows:
                seen.update(r.get(app_column, ()))
        apps = sorted(seen)
    return FeatureEncoder(tuple(features), boundaries, ranges, tuple(apps), n_buckets, app_column)


def encode(encoder: FeatureEncoder, row: Mapping) -> tuple[BucketedExample, np.ndarray]:
    x = encoder.encode(row)
    return x, encoder.onehot(x)


def decode(encoder: FeatureEncoder, x: BucketedExample) -> dict:
    return encoder.decode(x)


@dataclass(frozen=True)
class Schema:
    numeric: tuple[str, ...]
    app_column: Optional[str] = "apps"
    id_column: Optional[str] = None
    integer: frozenset = frozenset()
    extra: tuple[str, ...] = ()


def _parse(value: str, kind, line: int, column: str):
    try:
        return kind(value)
    except ValueError:
        raise CsvError(f"line {line}, column {column!r}: cannot parse {value!r} "
                       f"as {kind.__name__}") from None


def load_csv(path: Union[str, Path], schema: Schema) -> list[dict]:
    """Read typed rows; app cells are ``|``-separated app names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = list(schema.numeric) + [c for c in (schema.app_column, schema.id_column) if c]
        for col in needed + list(schema.extra):
            if col not in header:
                raise CsvError(f"missing column {col!r} in {path}")
        rows = []
        for line, rec in enumerate(reader, start=2):
            row = {}
            for col in schema.numeric:
                row[col] = _parse(rec[col], int if col in schema.integer else float, line, col)
            if schema.app_column:
                cell = (rec[schema.app_column] or "").strip()
                row[schema.app_column] = frozenset(
                    a.strip() for a in cell.split(APP_DELIMITER) if a.strip())
            if schema.id_column:
                row[schema.id_column] = rec[schema.id_column]
            for col in schema.extra:
                row[col] = rec[col]
            rows.append(row)
    return rows


def infer_schema(path: Union[str, Path], app_column: Optional[str] = "apps",
                 id_column: Optional[str] = "id", exclude: Iterable[str] = ()) -> Schema:
    """Every header column other than the id/app/excluded ones is numeric."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    special = {app_column, id_column, *exclude}
    return Schema(tuple(c for c in header if c not in special),
                  app_column if app_column in header else None,
                  id_column if id_column in header else None,
                  extra=tuple(c for c in exclude if c in header))


def split_rows(rows: Sequence, test_fraction: float = 0.1, seed: int = 0) -> tuple[list, list]:
    """Deterministic seeded train/test split."""
    order = np.random.default_rng(seed).permutation(len(rows))
    n_test = int(round(test_fraction * len(rows)))
    test = set(order[:n_test].tolist())
    return ([r for i, r in enumerate(rows) if i not in test],
            [r for i, r in enumerate(rows) if i in test])
