"""Query model, normalization, and dataset/workload generators.

Queries are conjunctions of per-clustering-key filters. Normalization gives
every clustering key exactly one filter by assigning a global range filter to
keys the query does not constrain; scans then apply filters that the key
prefix cannot satisfy as residual post-filters.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateFilterError,
    EmptyRangeError,
    EmptyWorkloadError,
    InsufficientStatsError,
    TypeMismatchError,
    UnknownColumnError,
)
from .schema import (
    CLUSTERING_KEY,
    DATE,
    FLOAT64,
    INT64,
    STRING,
    VALUE,
    ColumnDef,
    ColumnStats,
    Schema,
)

EQUALITY = "equality"
RANGE = "range"
GLOBAL = "global"


@dataclass(frozen=True)
class Filter:
    column: str
    kind: str
    value: object = None          # equality literal
    start: object = None          # range [start, end)
    end: object = None

    def __post_init__(self):
        if self.kind not in (EQUALITY, RANGE, GLOBAL):
            raise ValueError(f"bad filter kind {self.kind!r}")
        if self.kind == RANGE and not (self.start < self.end):
            raise EmptyRangeError(
                f"range on {self.column!r} has start {self.start!r} >= end {self.end!r}"
            )

    @staticmethod
    def eq(column: str, value) -> "Filter":
        return Filter(column, EQUALITY, value=value)

    @staticmethod
    def range(column: str, start, end) -> "Filter":
        return Filter(column, RANGE, start=start, end=end)

    @staticmethod
    def everything(column: str) -> "Filter":
        return Filter(column, GLOBAL)

    def to_dict(self) -> dict:
        d: dict = {"column": self.column, "kind": self.kind}
        if self.kind == EQUALITY:
            d["value"] = self.value
        elif self.kind == RANGE:
            d["start"] = self.start
            d["end"] = self.end
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Filter":
        kind = d["kind"]
        if kind == EQUALITY:
            return cls.eq(d["column"], d["value"])
        if kind == RANGE:
            return cls.range(d["column"], d["start"], d["end"])
        return cls.everything(d["column"])


@dataclass(frozen=True)
class Query:
    """At most one filter per clustering key; exactly one once normalized."""

    filters: tuple[Filter, ...]
    projection: tuple[str, ...] = ()
    aggregate: tuple[str, str] | None = None    # ("sum", column)

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        object.__setattr__(self, "projection", tuple(self.projection))

    def filter_for(self, column: str) -> Filter | None:
        for f in self.filters:
            if f.column == column:
                return f
        return None

    def to_dict(self) -> dict:
        return {
            "filters": [f.to_dict() for f in self.filters],
            "projection": list(self.projection),
            "aggregate": (
                {"op": self.aggregate[0], "column": self.aggregate[1]}
                if self.aggregate
                else None
            ),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Query":
        agg = d.get("aggregate")
        return cls(
            filters=tuple(Filter.from_dict(f) for f in d["filters"]),
            projection=tuple(d.get("projection", ())),
            aggregate=(agg["op"], agg["column"]) if agg else None,
        )


def normalize(query: Query, schema: Schema) -> Query:
    """Give every clustering key exactly one filter; unfiltered keys go global.

    Raises UnknownColumnError for filters on non-clustering columns,
    DuplicateFilterError for repeated columns, EmptyRangeError for empty
    ranges (checked at Filter construction).
    """
    keys = schema.clustering_keys
    by_col: dict[str, Filter] = {}
    for f in query.filters:
        if f.column not in keys:
            raise UnknownColumnError(f.column)
        if f.column in by_col:
            raise DuplicateFilterError(f.column)
        by_col[f.column] = f
    full = tuple(by_col.get(k, Filter.everything(k)) for k in keys)
    return Query(filters=full, projection=query.projection, aggregate=query.aggregate)


@dataclass(frozen=True)
class Workload:
    queries: tuple[Query, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        if not self.queries:
            raise EmptyWorkloadError("workload has no queries")

    def __len__(self) -> int:
        return len(self.queries)

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "queries": [q.to_dict() for q in self.queries],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Workload":
        return cls(
            queries=tuple(Query.from_dict(q) for q in d["queries"]),
            provenance=dict(d.get("provenance", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "Workload":
        return cls.from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# Datasets
# --------------------------------------------------------------------------

_CSV_DTYPES = {INT64: int, DATE: int, FLOAT64: float, STRING: str}


@dataclass
class Dataset:
    """Columnar record batch plus its schema."""

    schema: Schema
    columns: dict[str, np.ndarray]

    @property
    def row_count(self) -> int:
        return len(next(iter(self.columns.values())))

    def rows(self) -> Iterator[dict]:
        names = list(self.columns)
        cols = [self.columns[n] for n in names]
        for i in range(self.row_count):
            yield {n: c[i].item() for n, c in zip(names, cols)}

    def save_csv(self, path: str | Path) -> None:
        names = [c.name for c in self.schema.columns]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            cols = []
            for n in names:
                col = self.columns[n]
                if col.dtype.kind == "S":
                    col = np.char.decode(col, "utf-8")
                cols.append(col.tolist())
            w.writerows(zip(*cols))

    @classmethod
    def load_csv(cls, path: str | Path, schema: Schema) -> "Dataset":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            raw = list(zip(*r))
        columns: dict[str, np.ndarray] = {}
        for name, values in zip(header, raw):
            dt = schema.datatype(name)
            py = _CSV_DTYPES[dt]
            try:
                vals = [py(v) for v in values]
            except ValueError as e:
                raise TypeMismatchError(str(e)) from e
            if dt == STRING:
                columns[name] = np.asarray([v.encode("utf-8") for v in vals])
            elif dt == FLOAT64:
                columns[name] = np.asarray(vals, dtype=np.float64)
            else:
                columns[name] = np.asarray(vals, dtype=np.int64)
        return cls(schema, columns)

    def save_npz(self, path: str | Path) -> None:
        np.savez_compressed(path, **self.columns)

    @classmethod
    def load_npz(cls, path: str | Path, schema: Schema) -> "Dataset":
        with np.load(path) as z:
            columns = {k: z[k] for k in z.files}
        return cls(schema, columns)


def near_equal_factors(n: int, m: int) -> list[int]:
    """Split n into m integer factors with product exactly n, spread minimized.

    Used to size the per-key domains of the uniform dataset so the full
    factorial grid has exactly n rows.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")

    best: tuple | None = None

    def rec(rest: int, slots: int, lo: int, acc: list[int]):
        nonlocal best
        if slots == 1:
            if rest >= lo:
                cand = acc + [rest]
                score = (cand[-1] / cand[0], cand[-1])
                if best is None or score < best[0]:
                    best = (score, cand)
            return
        # non-decreasing chains: the next factor is at most rest**(1/slots)
        limit = int(round(rest ** (1.0 / slots))) + 1
        for d in range(lo, min(limit, rest) + 1):
            if rest % d == 0:
                rec(rest // d, slots - 1, d, acc + [d])

    rec(n, m, 1, [])
    assert best is not None
    return best[1]


def gen_uniform(rows: int, keys: int, seed: int) -> Dataset:
    """Uniform integer dataset covering its whole key space.

    Emits a full factorial grid over per-key domains whose sizes multiply to
    exactly `rows` (each near rows**(1/keys)), in seed-shuffled row order.
    Every key combination appears exactly once, so the empirical joint
    distribution factorizes and selectivity products are exact.
    """
    if rows < 1 or keys < 1:
        raise ValueError("rows and keys must be positive")
    domains = near_equal_factors(rows, keys)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(rows)
    columns: dict[str, np.ndarray] = {}
    stride = rows
    for i, k in enumerate(domains):
        stride //= k
        vals = (np.arange(rows, dtype=np.int64) // stride) % k
        columns[f"ck{i + 1}"] = vals[perm]
    columns["payload"] = np.char.zfill(
        np.arange(rows).astype("S34"), 50
    ).astype("S50")
    cols = tuple(
        ColumnDef(f"ck{i + 1}", CLUSTERING_KEY, INT64) for i in range(keys)
    ) + (ColumnDef("payload", VALUE, STRING),)
    return Dataset(Schema("uniform", cols), columns)


_EPOCH = date(1970, 1, 1)
_ORDERS_START = (date(1992, 1, 1) - _EPOCH).days
_ORDERS_SPAN = 7 * 365 + 2  # 7-year span, 1992-01-01 .. 1998-12-30


def orders_schema() -> Schema:
    return Schema(
        "orders",
        (
            ColumnDef("custkey", CLUSTERING_KEY, INT64),
            ColumnDef("orderdate", CLUSTERING_KEY, DATE),
            ColumnDef("clerk", CLUSTERING_KEY, STRING),
            ColumnDef("totalprice", VALUE, FLOAT64),
            ColumnDef("orderkey", VALUE, INT64),
        ),
    )


def gen_orders(scale: float, seed: int) -> Dataset:
    """Order records shaped like the TPC-H orders table.

    scale 1.0 gives 1,500,000 rows; clustering keys are custkey (150,000 x
    scale ids), orderdate (int64 days over a 7-year span), and clerk
    ("Clerk#" + zero-padded id, 1,000 x scale ids). Prices are random within
    a plausible range; orderkey is unique.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    n = round(1_500_000 * scale)
    rng = np.random.default_rng(seed)
    custkey = rng.integers(1, max(2, int(150_000 * scale)) + 1, n, dtype=np.int64)
    orderdate = rng.integers(
        _ORDERS_START, _ORDERS_START + _ORDERS_SPAN, n, dtype=np.int64
    )
    clerk_ids = rng.integers(1, max(2, int(1_000 * scale)) + 1, n)
    clerk = np.char.add(b"Clerk#", np.char.zfill(clerk_ids.astype("S9"), 9))
    totalprice = np.round(rng.uniform(850.0, 560_000.0, n), 2)
    orderkey = np.arange(1, n + 1, dtype=np.int64)
    return Dataset(
        orders_schema(),
        {
            "custkey": custkey,
            "orderdate": orderdate,
            "clerk": clerk,
            "totalprice": totalprice,
            "orderkey": orderkey,
        },
    )


# --------------------------------------------------------------------------
# Query generators
# --------------------------------------------------------------------------

Q1 = "q1"
Q2 = "q2"
MIX = "mix"
RANDOM = "random"
TEMPLATES = (Q1, Q2, MIX, RANDOM)

# random template: per-key filter kind probabilities
_P_EQ, _P_RANGE = 0.4, 0.3


def _sample_value(rng: np.random.Generator, stats: ColumnStats, column: str):
    """A literal drawn from the observed value distribution."""
    values = stats.distinct_values(column)
    counts = stats.counts(column)
    i = int(rng.choice(len(values), p=counts / counts.sum()))
    return values[i].item()


def _q1_instance(rng, stats: ColumnStats) -> Query:
    return Query(
        filters=(
            Filter.eq("orderdate", _sample_value(rng, stats, "orderdate")),
            Filter.eq("clerk", _sample_value(rng, stats, "clerk")),
            Filter.everything("custkey"),
        ),
        projection=("totalprice",),
    )


def _q2_instance(rng, stats: ColumnStats) -> Query:
    start = _sample_value(rng, stats, "orderdate")
    width = int(rng.integers(1, 31))
    return Query(
        filters=(
            Filter.eq("custkey", _sample_value(rng, stats, "custkey")),
            Filter.eq("clerk", _sample_value(rng, stats, "clerk")),
            Filter.range("orderdate", start, start + width),
        ),
        projection=("totalprice",),
        aggregate=("sum", "totalprice"),
    )


def _random_instance(rng, stats: ColumnStats, schema: Schema) -> Query:
    filters = []
    for key in schema.clustering_keys:
        if schema.datatype(key) == STRING:
            raise InsufficientStatsError(
                "random template supports integer clustering keys only"
            )
        r = rng.random()
        if r < _P_EQ:
            filters.append(Filter.eq(key, _sample_value(rng, stats, key)))
        elif r < _P_EQ + _P_RANGE:
            lo = int(stats.min(key))
            hi = int(stats.max(key)) + 1
            a = int(rng.integers(lo, hi))
            b = int(rng.integers(lo, hi))
            s, e = min(a, b), max(a, b)
            if s == e:
                e += 1
            filters.append(Filter.range(key, s, e))
        else:
            filters.append(Filter.everything(key))
    return Query(filters=tuple(filters), projection=schema.value_columns)


def gen_queries(
    template: str,
    count: int,
    seed: int,
    stats: ColumnStats,
    schema: Schema | None = None,
) -> Workload:
    """Normalized workload of `count` query instances from one template.

    q1/q2/mix expect the orders schema; random expects integer clustering
    keys and draws each key's filter kind as equality (p=0.4), range (p=0.3,
    random sub-interval), or global (p=0.3).
    """
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}")
    if count < 1:
        raise EmptyWorkloadError("count must be >= 1")
    if stats is None:
        raise InsufficientStatsError("query generation needs column stats")
    schema = schema or stats.schema
    for key in schema.clustering_keys:
        if key not in stats.tables:
            raise InsufficientStatsError(f"no stats for clustering key {key!r}")
    rng = np.random.default_rng(seed)
    queries = []
    for i in range(count):
        if template == Q1 or (template == MIX and i % 2 == 0):
            q = _q1_instance(rng, stats)
        elif template in (Q2, MIX):
            q = _q2_instance(rng, stats)
        else:
            q = _random_instance(rng, stats, schema)
        queries.append(normalize(q, schema))
    return Workload(
        queries=tuple(queries),
        provenance={"template": template, "seed": seed, "count": count},
    )
