"""Workload benchmarking: warm-up plus averaged runs per query, nearest-rank
percentiles, timeout clamping, and execution-verified equivalence of rewrites."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .executor import ExecutorConfig, Status, execute


@dataclass(frozen=True, slots=True)
class BenchEntry:
    sql: str
    status: str
    latency_seconds: float
    rewrite_sql: str | None = None
    rewrite_status: str | None = None
    rewrite_latency_seconds: float | None = None
    equivalent: bool | None = None

    def to_json(self) -> dict:
        return {
            "sql": self.sql,
            "status": self.status,
            "latency_seconds": self.latency_seconds,
            "rewrite_sql": self.rewrite_sql,
            "rewrite_status": self.rewrite_status,
            "rewrite_latency_seconds": self.rewrite_latency_seconds,
            "equivalent": self.equivalent,
        }


@dataclass(frozen=True, slots=True)
class BenchReport:
    entries: tuple[BenchEntry, ...]
    mean: float
    median: float
    p75: float
    p95: float
    equivalence_rate: float
    timeout_count: int

    def __post_init__(self) -> None:
        if not (self.median <= self.p75 <= self.p95):
            raise ValueError("percentiles must be nondecreasing")
        if not 0.0 <= self.equivalence_rate <= 1.0:
            raise ValueError("equivalence_rate must be in [0, 1]")

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "p75": self.p75,
            "p95": self.p95,
            "equivalence_rate": self.equivalence_rate,
            "timeout_count": self.timeout_count,
            "entries": [e.to_json() for e in self.entries],
        }


def nearest_rank(values: list[float], percentile: float) -> float:
    """The ceil(p*n)-th order statistic (nearest-rank method)."""
    if not values:
        raise ValueError("no values to rank")
    ordered = sorted(values)
    rank = max(1, math.ceil(percentile / 100.0 * len(ordered)))
    return ordered[rank - 1]


def summarize_latencies(values: list[float]) -> tuple[float, float, float, float]:
    return (
        sum(values) / len(values),
        nearest_rank(values, 50),
        nearest_rank(values, 75),
        nearest_rank(values, 95),
    )


def run_bench(
    queries: list[str],
    backend,
    config: ExecutorConfig | None = None,
    rewrites: list[str] | None = None,
) -> BenchReport:
    """Benchmark a workload. With rewrites, each pair is measured and the
    rewrite's result hash is checked against the original's; the aggregates
    then describe the rewritten latencies. Timed-out queries enter the
    aggregates at the clamp value (the configured timeout)."""
    config = config or ExecutorConfig(timeout_seconds=300.0, warmup_runs=1, measured_runs=3)
    if not queries:
        raise ValueError("empty workload")
    if rewrites is not None and len(rewrites) != len(queries):
        raise ValueError("rewrites must align one-to-one with queries")

    entries: list[BenchEntry] = []
    effective: list[float] = []
    timeout_count = 0
    matches = 0
    compared = 0

    for i, sql in enumerate(queries):
        original = execute(sql, backend, config)
        entry_latency = original.latency_seconds
        rewrite_sql = rewrites[i] if rewrites is not None else None
        rewrite_status = None
        rewrite_latency = None
        equivalent = None
        if rewrite_sql is not None:
            rewritten = execute(rewrite_sql, backend, config)
            rewrite_status = rewritten.status.value
            rewrite_latency = rewritten.latency_seconds
            equivalent = (
                original.status is Status.OK
                and rewritten.status is Status.OK
                and original.result_hash == rewritten.result_hash
            )
            compared += 1
            matches += int(equivalent)
            effective.append(rewrite_latency)
            if rewritten.status is Status.TIMEOUT:
                timeout_count += 1
        else:
            effective.append(entry_latency)
            if original.status is Status.TIMEOUT:
                timeout_count += 1
        entries.append(
            BenchEntry(
                sql=sql,
                status=original.status.value,
                latency_seconds=entry_latency,
                rewrite_sql=rewrite_sql,
                rewrite_status=rewrite_status,
                rewrite_latency_seconds=rewrite_latency,
                equivalent=equivalent,
            )
        )

    mean, median, p75, p95 = summarize_latencies(effective)
    return BenchReport(
        entries=tuple(entries),
        mean=mean,
        median=median,
        p75=p75,
        p95=p95,
        equivalence_rate=(matches / compared) if compared else 1.0,
        timeout_count=timeout_count,
    )
