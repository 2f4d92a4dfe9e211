"""Query execution: backends, latency measurement, result hashing, validity,
and the asynchronous dispatch cache."""

from .backends import PostgresBackend, SimulatedBackend, fixture_path, load_workload
from .cache import (
    DispatchQueueFull,
    Dispatcher,
    ResultCache,
    Ticket,
    normalize_sql,
    query_fingerprint,
    validity,
)
from .costmodel import CostParams, extract_features, synthetic_latency
from .hashing import (
    EMPTY_RESULT_DIGEST,
    canonical_cell,
    canonical_row,
    fnv1a64,
    result_hash,
    text_fingerprint,
)
from .outcomes import ExecutionOutcome, ExecutorConfig, Status, TransportError
from .protocol import execute

__all__ = [
    "CostParams",
    "DispatchQueueFull",
    "Dispatcher",
    "EMPTY_RESULT_DIGEST",
    "ExecutionOutcome",
    "ExecutorConfig",
    "PostgresBackend",
    "ResultCache",
    "SimulatedBackend",
    "Status",
    "Ticket",
    "TransportError",
    "canonical_cell",
    "canonical_row",
    "execute",
    "extract_features",
    "fixture_path",
    "fnv1a64",
    "load_workload",
    "normalize_sql",
    "query_fingerprint",
    "result_hash",
    "synthetic_latency",
    "text_fingerprint",
    "validity",
]
