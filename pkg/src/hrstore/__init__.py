"""Embedded wide-column store with heterogeneous replica layouts.

Each replica persists the same rows under a different clustering-key
permutation; reads are routed to the replica whose layout makes them
cheapest, and a simulated-annealing optimizer picks the layouts for a known
workload.
"""

from .errors import HrStoreError
from .schema import (
    ColumnDef,
    ColumnStats,
    ReplicaLayout,
    Schema,
    build_stats,
    build_stats_from_columns,
    cdf,
    pmf,
    validate_layout,
)
from .workload import (
    Dataset,
    Filter,
    Query,
    Workload,
    gen_orders,
    gen_queries,
    gen_uniform,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "ColumnDef",
    "ColumnStats",
    "Dataset",
    "Filter",
    "HrStoreError",
    "Query",
    "ReplicaLayout",
    "Schema",
    "Workload",
    "build_stats",
    "build_stats_from_columns",
    "cdf",
    "gen_orders",
    "gen_queries",
    "gen_uniform",
    "normalize",
    "pmf",
    "validate_layout",
]
