"""Verification-driven self-correction for candidate rewrites.

A candidate is validated through the backend's EXPLAIN facility, which checks
structural integrity without retrieving data. On failure, the model client is
asked to regenerate with an augmented context (original query, invalid
candidate, database error); after max_rounds the original query is returned,
so the loop's output always verifies."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

from .mutate import ExtractionError, extract_sql

ACCEPTED = "accepted"
REPAIRED = "repaired"
FALLBACK = "fallback"


@dataclass(frozen=True, slots=True)
class VerifyResult:
    ok: bool
    message: str = ""


@dataclass(frozen=True, slots=True)
class RepairAttempt:
    original_sql: str
    candidate_sql: str
    error_message: str
    round: int
    max_rounds: int

    def __post_init__(self) -> None:
        if self.round > self.max_rounds:
            raise ValueError("round exceeds max_rounds")


@dataclass(frozen=True, slots=True)
class RepairResult:
    sql: str
    status: str  # accepted | repaired | fallback
    rounds_used: int
    model_calls: int
    last_error: str = ""
    attempts: tuple[RepairAttempt, ...] = ()


def verify(candidate_sql: str, backend) -> VerifyResult:
    """Zero-cost validity check: ok iff the backend produces a plan."""
    ok, text = backend.explain(candidate_sql)
    return VerifyResult(ok=ok, message="" if ok else text)


def _repair_template() -> str:
    return (importlib.resources.files("slowforge") / "templates" / "repair.txt").read_text()


def repair_loop(
    original_sql: str,
    candidate_sql: str,
    backend,
    model_client=None,
    max_rounds: int = 2,
    schema_ddl: str | None = None,
) -> RepairResult:
    """Return a rewrite that verifies, or the original query as a fallback.

    The original must verify up front (it is the safety net). Each round
    feeds the previous failure back to the model; an unusable or unavailable
    model falls back to the original immediately.
    """
    baseline = verify(original_sql, backend)
    if not baseline.ok:
        raise ValueError(f"original query does not verify: {baseline.message}")

    check = verify(candidate_sql, backend)
    if check.ok:
        return RepairResult(candidate_sql, ACCEPTED, rounds_used=0, model_calls=0)

    if schema_ddl is None:
        schema_ddl = getattr(backend, "schema_ddl", "")
    template = _repair_template()
    current = candidate_sql
    error = check.message
    calls = 0
    attempts: list[RepairAttempt] = []
    for round_number in range(1, max_rounds + 1):
        attempts.append(
            RepairAttempt(original_sql, current, error, round_number, max_rounds)
        )
        prompt = template.format(
            original_sql=original_sql,
            candidate_sql=current,
            error_message=error,
            schema=schema_ddl,
        )
        if model_client is None:
            return RepairResult(
                original_sql, FALLBACK, round_number - 1, calls, error, tuple(attempts)
            )
        try:
            reply = model_client.complete(prompt)
            calls += 1
        except Exception:  # model failure of any kind: fall back immediately
            return RepairResult(
                original_sql, FALLBACK, round_number - 1, calls, error, tuple(attempts)
            )
        try:
            fixed = extract_sql(reply)
        except ExtractionError as exc:
            error = f"{error} (model reply unusable: {exc})"
            continue
        check = verify(fixed, backend)
        if check.ok:
            return RepairResult(fixed, REPAIRED, round_number, calls, "", tuple(attempts))
        current = fixed
        error = check.message
    return RepairResult(original_sql, FALLBACK, max_rounds, calls, error, tuple(attempts))
