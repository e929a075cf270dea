"""Table schemas, replica layouts, and per-column empirical statistics.

Statistics are exact tables (value -> count) per clustering-key column.
The cumulative table uses the strict-lower convention: cdf(v) = P[x < v],
so a half-open range [s, e) has selectivity cdf(e) - cdf(s) exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateKeyError,
    EmptyDatasetError,
    MissingKeyError,
    TypeMismatchError,
    UnknownColumnError,
    UnknownKeyError,
)

# Column datatypes. Dates are stored as int64 days since the Unix epoch so
# every clustering comparison is scalar.
INT64 = "int64"
DATE = "date"
STRING = "string"
FLOAT64 = "float64"
DATATYPES = (INT64, DATE, STRING, FLOAT64)

PARTITION_KEY = "partition-key"
CLUSTERING_KEY = "clustering-key"
VALUE = "value"
KINDS = (PARTITION_KEY, CLUSTERING_KEY, VALUE)


@dataclass(frozen=True)
class ColumnDef:
    name: str
    kind: str
    datatype: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"bad column kind {self.kind!r}")
        if self.datatype not in DATATYPES:
            raise ValueError(f"bad datatype {self.datatype!r}")


@dataclass(frozen=True)
class Schema:
    """An ordered set of columns; at least one clustering key, at most one partition key."""

    table: str
    columns: tuple[ColumnDef, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        if len(self.clustering_keys) < 1:
            raise ValueError("schema needs at least one clustering-key column")
        if sum(c.kind == PARTITION_KEY for c in self.columns) > 1:
            raise ValueError("schema allows at most one partition-key column")

    @property
    def clustering_keys(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.kind == CLUSTERING_KEY)

    @property
    def value_columns(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.kind == VALUE)

    @property
    def partition_key(self) -> str | None:
        for c in self.columns:
            if c.kind == PARTITION_KEY:
                return c.name
        return None

    @property
    def key_count(self) -> int:
        return len(self.clustering_keys)

    def column(self, name: str) -> ColumnDef:
        for c in self.columns:
            if c.name == name:
                return c
        raise UnknownColumnError(name)

    def datatype(self, name: str) -> str:
        return self.column(name).datatype

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "columns": [
                {"name": c.name, "kind": c.kind, "datatype": c.datatype}
                for c in self.columns
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Schema":
        cols = tuple(
            ColumnDef(c["name"], c["kind"], c["datatype"]) for c in d["columns"]
        )
        return cls(d["table"], cols)


@dataclass(frozen=True)
class ReplicaLayout:
    """One replica's on-disk structure: a permutation of the clustering keys."""

    replica_id: int
    order: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))

    def to_dict(self) -> dict:
        return {"replica_id": self.replica_id, "order": list(self.order)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ReplicaLayout":
        return cls(int(d["replica_id"]), tuple(d["order"]))


def validate_layout(schema: Schema, layout: ReplicaLayout) -> None:
    """Raise unless layout.order is a permutation of the schema's clustering keys."""
    keys = set(schema.clustering_keys)
    seen: set[str] = set()
    for name in layout.order:
        if name not in keys:
            raise UnknownKeyError(name)
        if name in seen:
            raise DuplicateKeyError(name)
        seen.add(name)
    for name in schema.clustering_keys:
        if name not in seen:
            raise MissingKeyError(name)


def layouts_to_json(layouts: Sequence[ReplicaLayout]) -> str:
    return json.dumps({"layouts": [l.to_dict() for l in layouts]}, indent=2)


def layouts_from_json(text: str) -> list[ReplicaLayout]:
    return [ReplicaLayout.from_dict(d) for d in json.loads(text)["layouts"]]


# --------------------------------------------------------------------------
# Empirical statistics
# --------------------------------------------------------------------------

_NUMERIC = (INT64, DATE, FLOAT64)


@dataclass
class _ColumnTable:
    """Sorted distinct values with counts and an exclusive running sum."""

    values: np.ndarray        # sorted distinct values
    counts: np.ndarray        # int64, same length
    cum_below: np.ndarray     # counts of rows strictly below values[i]

    @property
    def total(self) -> int:
        return int(self.cum_below[-1] + self.counts[-1]) if len(self.counts) else 0


@dataclass
class ColumnStats:
    """Exact empirical distribution per clustering-key column.

    Immutable after construction; safe to share across readers.
    """

    schema: Schema
    total_rows: int
    tables: dict[str, _ColumnTable] = field(repr=False)

    def _table(self, column: str) -> _ColumnTable:
        try:
            return self.tables[column]
        except KeyError:
            raise UnknownColumnError(column) from None

    def pmf(self, column: str, value) -> float:
        """Exact empirical mass of `value`; 0.0 for unseen values."""
        t = self._table(column)
        v = _coerce(value, self.schema.datatype(column))
        i = np.searchsorted(t.values, v, side="left")
        if i < len(t.values) and t.values[i] == v:
            return float(t.counts[i]) / self.total_rows
        return 0.0

    def cdf(self, column: str, value) -> float:
        """P[x < value] under the empirical distribution."""
        t = self._table(column)
        v = _coerce(value, self.schema.datatype(column))
        i = np.searchsorted(t.values, v, side="left")
        if i == 0:
            return 0.0
        return float(t.cum_below[i - 1] + t.counts[i - 1]) / self.total_rows

    def count_below(self, column: str, value) -> int:
        """Number of rows with x < value (exact integer form of cdf)."""
        t = self._table(column)
        v = _coerce(value, self.schema.datatype(column))
        i = np.searchsorted(t.values, v, side="left")
        if i == 0:
            return 0
        return int(t.cum_below[i - 1] + t.counts[i - 1])

    def count_eq(self, column: str, value) -> int:
        t = self._table(column)
        v = _coerce(value, self.schema.datatype(column))
        i = np.searchsorted(t.values, v, side="left")
        if i < len(t.values) and t.values[i] == v:
            return int(t.counts[i])
        return 0

    def min(self, column: str):
        return self._table(column).values[0].item()

    def max(self, column: str):
        return self._table(column).values[-1].item()

    def distinct_values(self, column: str) -> np.ndarray:
        return self._table(column).values

    def counts(self, column: str) -> np.ndarray:
        return self._table(column).counts

    def to_dict(self) -> dict:
        cols = {}
        for name, t in self.tables.items():
            vals = t.values.tolist()
            if self.schema.datatype(name) == STRING:
                vals = [v.decode("utf-8") for v in vals]
            cols[name] = {
                "pmf": [[v, int(c)] for v, c in zip(vals, t.counts.tolist())],
                "min": vals[0],
                "max": vals[-1],
            }
        return {
            "table": self.schema.table,
            "total_rows": self.total_rows,
            "columns": cols,
        }

    @classmethod
    def from_dict(cls, d: Mapping, schema: Schema) -> "ColumnStats":
        tables = {}
        for name, col in d["columns"].items():
            vals = [p[0] for p in col["pmf"]]
            counts = np.asarray([p[1] for p in col["pmf"]], dtype=np.int64)
            values = _column_array(vals, schema.datatype(name))
            cum = np.concatenate(([0], np.cumsum(counts)[:-1]))
            tables[name] = _ColumnTable(values, counts, cum)
        return cls(schema=schema, total_rows=int(d["total_rows"]), tables=tables)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path, schema: Schema) -> "ColumnStats":
        return cls.from_dict(json.loads(Path(path).read_text()), schema)


def _coerce(value, datatype: str):
    if datatype == STRING:
        if isinstance(value, str):
            return value.encode("utf-8")
        if isinstance(value, (bytes, np.bytes_)):
            return bytes(value)
        raise TypeMismatchError(f"expected string, got {type(value).__name__}")
    if datatype == FLOAT64:
        if isinstance(value, (int, float, np.integer, np.floating)):
            return float(value)
        raise TypeMismatchError(f"expected float, got {type(value).__name__}")
    # int64 / date
    if isinstance(value, (bool,)) or not isinstance(value, (int, np.integer)):
        raise TypeMismatchError(f"expected int, got {type(value).__name__}")
    return int(value)


def _column_array(values: Sequence, datatype: str) -> np.ndarray:
    if datatype == STRING:
        vals = [v.encode("utf-8") if isinstance(v, str) else bytes(v) for v in values]
        width = max((len(v) for v in vals), default=1)
        return np.asarray(vals, dtype=f"S{max(width, 1)}")
    if datatype == FLOAT64:
        return np.asarray(values, dtype=np.float64)
    return np.asarray(values, dtype=np.int64)


def build_stats_from_columns(columns: Mapping[str, np.ndarray], schema: Schema) -> ColumnStats:
    """Exact stats from columnar data (one array per clustering key)."""
    n = None
    tables: dict[str, _ColumnTable] = {}
    for name in schema.clustering_keys:
        if name not in columns:
            raise UnknownColumnError(name)
        arr = np.asarray(columns[name])
        if n is None:
            n = len(arr)
        elif len(arr) != n:
            raise TypeMismatchError("clustering columns have unequal lengths")
        if n == 0:
            raise EmptyDatasetError("no rows")
        values, counts = np.unique(arr, return_counts=True)
        counts = counts.astype(np.int64)
        cum = np.concatenate(([0], np.cumsum(counts)[:-1]))
        tables[name] = _ColumnTable(values, counts, cum)
    assert n is not None
    return ColumnStats(schema=schema, total_rows=int(n), tables=tables)


def build_stats(rows: Iterable[Mapping], schema: Schema) -> ColumnStats:
    """Exact stats from a stream of row mappings.

    Raises TypeMismatchError on a malformed row and EmptyDatasetError on an
    empty stream.
    """
    keys = schema.clustering_keys
    acc: dict[str, list] = {k: [] for k in keys}
    n = 0
    for row in rows:
        for k in keys:
            if k not in row:
                raise TypeMismatchError(f"row {n} is missing column {k!r}")
            acc[k].append(_coerce(row[k], schema.datatype(k)))
        n += 1
    if n == 0:
        raise EmptyDatasetError("no rows")
    columns = {k: _column_array(acc[k], schema.datatype(k)) for k in keys}
    return build_stats_from_columns(columns, schema)


def pmf(stats: ColumnStats, column: str, value) -> float:
    return stats.pmf(column, value)


def cdf(stats: ColumnStats, column: str, value) -> float:
    return stats.cdf(column, value)
