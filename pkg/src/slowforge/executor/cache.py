"""Result cache and non-blocking execution dispatch.

Candidates are dispatched to a worker pool the moment they are generated;
outcomes land in a shared cache keyed by the query fingerprint (canonical SQL
text + backend id). Duplicate dispatches of one fingerprint coalesce into a
single backend execution, and completed cache entries are immutable.
"""

from __future__ import annotations

import threading
from concurrent.futures import Future, ThreadPoolExecutor

from ..sqltree import ParseError, parse, render
from .hashing import text_fingerprint
from .outcomes import ExecutionOutcome, ExecutorConfig, Status
from .protocol import execute


class DispatchQueueFull(Exception):
    """Backpressure signal: dispatch synchronously instead."""


def normalize_sql(sql: str) -> str:
    try:
        return render(parse(sql))
    except ParseError:
        return " ".join(sql.split())


def query_fingerprint(sql: str, backend_id: str) -> int:
    return text_fingerprint(normalize_sql(sql), backend_id)


class ResultCache:
    """Concurrent fingerprint -> outcome map with single-completion semantics."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._outcomes: dict[int, ExecutionOutcome] = {}

    def get(self, fingerprint: int) -> ExecutionOutcome | None:
        with self._lock:
            return self._outcomes.get(fingerprint)

    def complete(self, fingerprint: int, outcome: ExecutionOutcome) -> ExecutionOutcome:
        """Record an outcome; the first completion wins and later ones are
        ignored (completed entries are immutable)."""
        with self._lock:
            return self._outcomes.setdefault(fingerprint, outcome)

    def __len__(self) -> int:
        with self._lock:
            return len(self._outcomes)


class Ticket:
    def __init__(self, fingerprint: int, future: Future):
        self.fingerprint = fingerprint
        self._future = future

    def result(self, timeout: float | None = None) -> ExecutionOutcome:
        return self._future.result(timeout=timeout)

    def done(self) -> bool:
        return self._future.done()


class Dispatcher:
    """Worker pool with per-fingerprint coalescing over a ResultCache."""

    def __init__(
        self,
        backend,
        config: ExecutorConfig,
        cache: ResultCache | None = None,
        max_in_flight: int = 64,
    ):
        self.backend = backend
        self.config = config
        self.cache = cache if cache is not None else ResultCache()
        self.max_in_flight = max_in_flight
        self._lock = threading.Lock()
        self._pending: dict[int, Ticket] = {}
        self._pool = ThreadPoolExecutor(max_workers=max(1, backend.max_parallelism))

    def dispatch(self, sql: str) -> Ticket:
        """Non-blocking dispatch. Returns immediately with a ticket whose
        outcome eventually appears in the cache. Raises DispatchQueueFull when
        too many executions are in flight."""
        fp = query_fingerprint(sql, self.backend.backend_id)
        with self._lock:
            cached = self.cache.get(fp)
            if cached is not None:
                done: Future = Future()
                done.set_result(cached)
                return Ticket(fp, done)
            pending = self._pending.get(fp)
            if pending is not None:
                return pending
            if len(self._pending) >= self.max_in_flight:
                raise DispatchQueueFull(f"{len(self._pending)} executions in flight")
            future = self._pool.submit(self._run_and_record, fp, sql)
            ticket = Ticket(fp, future)
            self._pending[fp] = ticket
            return ticket

    def execute_sync(self, sql: str) -> ExecutionOutcome:
        """Synchronous execution through the same cache (used on backpressure,
        for seed queries, and by simulation awaiting a dispatched outcome).
        Joins an in-flight execution of the same fingerprint instead of
        re-running it."""
        fp = query_fingerprint(sql, self.backend.backend_id)
        with self._lock:
            cached = self.cache.get(fp)
            if cached is not None:
                return cached
            pending = self._pending.get(fp)
        if pending is not None:
            return self.await_outcome(pending)
        return self._run_and_record(fp, sql)

    def _run_and_record(self, fp: int, sql: str) -> ExecutionOutcome:
        cached = self.cache.get(fp)
        if cached is not None:
            return cached
        try:
            outcome = execute(sql, self.backend, self.config)
        finally:
            with self._lock:
                self._pending.pop(fp, None)
        return self.cache.complete(fp, outcome)

    def await_outcome(self, ticket: Ticket, slack_seconds: float = 30.0) -> ExecutionOutcome:
        """Bounded wait: the statement timeout plus dispatch slack."""
        budget = self.config.timeout_seconds * (
            self.config.warmup_runs + self.config.measured_runs
        )
        return ticket.result(timeout=budget + slack_seconds)

    def close(self) -> None:
        self._pool.shutdown(wait=True)


def validity(candidate: ExecutionOutcome, seed_hash: int) -> int:
    """Validity indicator: 1 iff the candidate executed cleanly and its
    order-insensitive result hash matches the seed's. Timeouts are 0 here and
    handled separately by the reward."""
    if candidate.status is not Status.OK:
        return 0
    return 1 if candidate.result_hash == seed_hash else 0
