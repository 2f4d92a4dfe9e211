"""Executor backends: the deterministic sqlite-backed simulator and the
PostgreSQL wire-protocol backend.

The simulator executes queries against small in-memory fixture tables for
exact result sets while reporting synthetic latency from the documented cost
model, which keeps search runs deterministic and desk-scale.
"""

from __future__ import annotations

import importlib.resources
import sqlite3
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from ..sqltree import ParseError, parse
from .costmodel import CostParams, synthetic_latency
from .outcomes import TransportError


@dataclass(frozen=True, slots=True)
class RawResult:
    rows: tuple[tuple, ...] | None
    latency_seconds: float
    error: str | None = None
    timed_out: bool = False


class ExecutorBackend(Protocol):
    backend_id: str
    max_parallelism: int

    def run(self, sql: str, timeout_seconds: float) -> RawResult: ...

    def explain(self, sql: str) -> tuple[bool, str]: ...

    def close(self) -> None: ...


def fixture_path(name: str) -> Path:
    return Path(str(importlib.resources.files("slowforge") / "fixtures" / name))


class SimulatedBackend:
    """In-memory fixture database with deterministic synthetic latency."""

    def __init__(
        self,
        schema_sql: str | None = None,
        data_sql: str | None = None,
        cost_params: CostParams | None = None,
        schema_id: str = "retail_v1",
        max_parallelism: int = 4,
    ):
        if schema_sql is None:
            schema_sql = fixture_path("schema.sql").read_text()
        if data_sql is None:
            data_sql = fixture_path("data.sql").read_text()
        self.schema_id = schema_id
        self.backend_id = f"sim:{schema_id}"
        self.max_parallelism = max_parallelism
        self.cost_params = cost_params or CostParams()
        self.schema_ddl = schema_sql
        self.calls = 0  # executed statements, observable by coalescing tests
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(":memory:", check_same_thread=False)
        self._conn.executescript(schema_sql)
        self._conn.executescript(data_sql)
        self._conn.commit()
        self.table_rows: dict[str, int] = {}
        for (name,) in self._conn.execute(
            "SELECT name FROM sqlite_master WHERE type = 'table'"
        ).fetchall():
            count = self._conn.execute(f"SELECT count(*) FROM {name}").fetchone()[0]
            self.table_rows[name.lower()] = count

    def run(self, sql: str, timeout_seconds: float) -> RawResult:
        try:
            tree = parse(sql)
        except ParseError as exc:
            return RawResult(None, 0.0, error=f"unsupported construct: {exc}")
        latency = synthetic_latency(tree, self.table_rows, self.cost_params)
        if latency >= timeout_seconds:
            # Budget check stands in for statement cancellation.
            return RawResult(None, timeout_seconds, timed_out=True)
        with self._lock:
            self.calls += 1
            try:
                rows = tuple(tuple(r) for r in self._conn.execute(sql).fetchall())
            except sqlite3.Error as exc:
                return RawResult(None, latency, error=str(exc))
        return RawResult(rows, latency)

    def explain(self, sql: str) -> tuple[bool, str]:
        with self._lock:
            try:
                rows = self._conn.execute(f"EXPLAIN QUERY PLAN {sql}").fetchall()
            except sqlite3.Error as exc:
                return False, str(exc)
        return True, "\n".join(str(r[-1]) for r in rows)

    def latency_of(self, sql: str) -> float:
        return synthetic_latency(parse(sql), self.table_rows, self.cost_params)

    def close(self) -> None:
        self._conn.close()


class PostgresBackend:
    """Backend over the PostgreSQL wire protocol (see pgwire).

    One connection guarded by a lock; statement timeouts are enforced
    server-side so timed-out statements are cancelled by the database.
    """

    def __init__(self, dsn: str, max_parallelism: int = 4):
        from .pgwire import PgConnection

        self.dsn = dsn
        self.backend_id = f"pg:{dsn.rsplit('/', 1)[-1]}"
        self.max_parallelism = max_parallelism
        self.calls = 0
        self._lock = threading.Lock()
        self._conn = PgConnection.connect(dsn)
        self.schema_ddl = ""

    def run(self, sql: str, timeout_seconds: float) -> RawResult:
        from .pgwire import PgQueryError, PgTransportError

        with self._lock:
            self.calls += 1
            started = time.monotonic()
            try:
                self._conn.set_statement_timeout(timeout_seconds)
                rows = self._conn.query(sql)
            except PgQueryError as exc:
                elapsed = time.monotonic() - started
                if exc.code == "57014":  # query_canceled: statement timeout
                    return RawResult(None, timeout_seconds, timed_out=True)
                return RawResult(None, min(elapsed, timeout_seconds), error=str(exc))
            except PgTransportError as exc:
                raise TransportError(str(exc)) from exc
            elapsed = time.monotonic() - started
            return RawResult(tuple(rows), elapsed)

    def explain(self, sql: str) -> tuple[bool, str]:
        from .pgwire import PgQueryError, PgTransportError

        with self._lock:
            try:
                rows = self._conn.query(f"EXPLAIN {sql}")
            except PgQueryError as exc:
                return False, str(exc)
            except PgTransportError as exc:
                raise TransportError(str(exc)) from exc
        return True, "\n".join(str(r[0]) for r in rows)

    def close(self) -> None:
        self._conn.close()


def backend_explain_plan(backend: ExecutorBackend, sql: str) -> str | None:
    ok, text = backend.explain(sql)
    return text if ok else None


def load_workload(text: str) -> list[str]:
    """Split a .sql workload file into statements (``;`` separated,
    ``--`` comments stripped)."""
    lines = []
    for line in text.splitlines():
        stripped = line.split("--", 1)[0]
        lines.append(stripped)
    statements = []
    for chunk in "\n".join(lines).split(";"):
        chunk = chunk.strip()
        if chunk:
            statements.append(chunk)
    return statements


def rows_preview(rows: Sequence[Sequence[object]], limit: int = 5) -> list[list[object]]:
    return [list(r) for r in rows[:limit]]
