"""The measurement protocol: warm-up runs, averaged measured runs, timeout
and error mapping, and result hashing."""

from __future__ import annotations

from .hashing import result_hash
from .outcomes import ExecutionOutcome, ExecutorConfig, Status


def execute(sql: str, backend, config: ExecutorConfig) -> ExecutionOutcome:
    """Run ``sql`` under the measurement protocol.

    warmup_runs unrecorded executions, then measured_runs recorded ones;
    latency is the arithmetic mean of the measured runs. Any run exceeding the
    timeout yields a timeout outcome with latency clamped to the limit; the
    result hash comes from the final run's rows.
    """
    timeout = config.timeout_seconds
    for _ in range(config.warmup_runs):
        raw = backend.run(sql, timeout)
        if raw.timed_out:
            return ExecutionOutcome(Status.TIMEOUT, timeout)
        if raw.error is not None:
            return ExecutionOutcome(
                Status.ERROR, min(raw.latency_seconds, timeout), error_message=raw.error
            )

    latencies: list[float] = []
    last = None
    for _ in range(config.measured_runs):
        raw = backend.run(sql, timeout)
        if raw.timed_out:
            return ExecutionOutcome(Status.TIMEOUT, timeout)
        if raw.error is not None:
            return ExecutionOutcome(
                Status.ERROR, min(raw.latency_seconds, timeout), error_message=raw.error
            )
        latencies.append(raw.latency_seconds)
        last = raw

    assert last is not None and last.rows is not None
    mean_latency = min(sum(latencies) / len(latencies), timeout)
    return ExecutionOutcome(
        Status.OK,
        mean_latency,
        result_hash=result_hash(last.rows),
        row_count=len(last.rows),
    )
