"""Execution outcome and measurement-protocol types."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Status(enum.Enum):
    OK = "ok"
    ERROR = "error"
    TIMEOUT = "timeout"


@dataclass(frozen=True, slots=True)
class ExecutionOutcome:
    status: Status
    latency_seconds: float
    result_hash: int | None = None
    row_count: int | None = None
    error_message: str | None = None

    def __post_init__(self) -> None:
        if (self.result_hash is not None) != (self.status is Status.OK):
            raise ValueError("result_hash must be present exactly when status is ok")

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "latency_seconds": self.latency_seconds,
            "result_hash": self.result_hash,
            "row_count": self.row_count,
            "error_message": self.error_message,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExecutionOutcome":
        return cls(
            status=Status(doc["status"]),
            latency_seconds=doc["latency_seconds"],
            result_hash=doc.get("result_hash"),
            row_count=doc.get("row_count"),
            error_message=doc.get("error_message"),
        )


@dataclass(frozen=True, slots=True)
class ExecutorConfig:
    """Measurement protocol: warm-up runs, then averaged measured runs,
    bounded by a hard timeout."""

    timeout_seconds: float = 300.0
    warmup_runs: int = 1
    measured_runs: int = 3

    def __post_init__(self) -> None:
        if self.measured_runs < 1:
            raise ValueError("measured_runs must be >= 1")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")


class TransportError(Exception):
    """Connection-level failure (retryable), distinct from a query error."""
