"""Exception hierarchy. Every error raised by this package derives from HrStoreError."""


class HrStoreError(Exception):
    """Base class for all hrstore errors."""


# --- schema / layout -------------------------------------------------------

class LayoutError(HrStoreError):
    """A replica layout is not a permutation of the schema's clustering keys."""


class MissingKeyError(LayoutError):
    def __init__(self, column: str):
        super().__init__(f"layout is missing clustering key {column!r}")
        self.column = column


class DuplicateKeyError(LayoutError):
    def __init__(self, column: str):
        super().__init__(f"layout repeats clustering key {column!r}")
        self.column = column


class UnknownKeyError(LayoutError):
    def __init__(self, column: str):
        super().__init__(f"layout names unknown column {column!r}")
        self.column = column


class UnknownColumnError(HrStoreError):
    def __init__(self, column: str):
        super().__init__(f"unknown column {column!r}")
        self.column = column


class TypeMismatchError(HrStoreError):
    """A record value does not conform to its column datatype."""


class EmptyDatasetError(HrStoreError):
    """Statistics were requested over zero rows."""


# --- queries / workload ----------------------------------------------------

class EmptyRangeError(HrStoreError):
    """A range filter has start >= end."""


class DuplicateFilterError(HrStoreError):
    def __init__(self, column: str):
        super().__init__(f"more than one filter on column {column!r}")
        self.column = column


class InsufficientStatsError(HrStoreError):
    """Query generation needs statistics that are not available."""


class EmptyWorkloadError(HrStoreError):
    """A workload must contain at least one query."""


# --- cost model ------------------------------------------------------------

class StatsMissingError(HrStoreError):
    """Row estimation needs column statistics that were never built."""


class InsufficientSamplesError(HrStoreError):
    """Calibration needs more samples, or a wider spread of scan sizes."""


class ModelMissingError(HrStoreError):
    def __init__(self, key_count: int):
        super().__init__(f"latency model has no fit for key count {key_count}")
        self.key_count = key_count


class DivisionByZeroError(HrStoreError):
    """Improvement ratio is undefined for a zero baseline cost."""


# --- optimizer -------------------------------------------------------------

class DegenerateSchemaError(HrStoreError):
    """Neighbor moves need at least two clustering keys to swap."""


class SearchSpaceTooLargeError(HrStoreError):
    """Exhaustive enumeration would exceed the configured state budget."""


# --- storage / engine ------------------------------------------------------

class IoFailureError(HrStoreError):
    """An underlying file operation failed."""


class CorruptTableError(HrStoreError):
    """A table file failed its checksum or ordering validation."""


class InvalidLayoutError(HrStoreError):
    """A store was created with layouts that fail validation."""


class NoSurvivingReplicaError(HrStoreError):
    """Recovery needs at least one surviving replica."""


class StoreClosedError(HrStoreError):
    """Operation on a closed replica set."""


class ManifestMismatchError(HrStoreError):
    """An on-disk manifest disagrees with the inputs of a command."""


class StoreMissingError(HrStoreError):
    def __init__(self, path: str):
        super().__init__(f"no store manifest found at {path!r}")
        self.path = path
