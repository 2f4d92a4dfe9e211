"""Corpus consolidation: seed gating, harvest of verified slowdowns,
validity auditing, statistics, and SFT-record export.

A record enters the corpus only when its variant executed cleanly, matched
the seed's result hash at generation time, and ran at least min_ratio times
slower than the seed. Timed-out variants never enter: their equivalence
cannot be verified.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, replace
from typing import Iterable

from .degrade import NOISE_STRATEGY_IDS
from .executor import ExecutorConfig, Status, execute
from .search import SearchTree
from .sqltree import ParseError, complexity_profile, parse

CORPUS_VERSION = 1

KEPT = "kept"
DROPPED = "dropped"
UNAUDITED = "unaudited"


@dataclass(frozen=True, slots=True)
class SeedGate:
    min_predicates: int = 4
    min_joins: int = 2
    min_subqueries: int = 1
    require_nonempty_result: bool = True

    def __post_init__(self) -> None:
        if min(self.min_predicates, self.min_joins, self.min_subqueries) < 0:
            raise ValueError("gate thresholds must be >= 0")


@dataclass(frozen=True, slots=True)
class GateDecision:
    accepted: bool
    reason: str  # ok | parse_error | execution_error | empty_result | below_complexity
    detail: str = ""
    t0: float | None = None
    h0: int | None = None


@dataclass(frozen=True, slots=True)
class CorpusRecord:
    seed_sql: str
    slow_sql: str
    seed_latency: float
    slow_latency: float
    slowdown_ratio: float
    strategy_lineage: tuple[str, ...]
    schema_id: str
    audit_verdict: str = UNAUDITED

    def to_json(self) -> dict:
        return {
            "seed_sql": self.seed_sql,
            "slow_sql": self.slow_sql,
            "seed_latency": self.seed_latency,
            "slow_latency": self.slow_latency,
            "slowdown_ratio": self.slowdown_ratio,
            "strategy_lineage": list(self.strategy_lineage),
            "schema_id": self.schema_id,
            "audit_verdict": self.audit_verdict,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CorpusRecord":
        return cls(
            seed_sql=doc["seed_sql"],
            slow_sql=doc["slow_sql"],
            seed_latency=doc["seed_latency"],
            slow_latency=doc["slow_latency"],
            slowdown_ratio=doc["slowdown_ratio"],
            strategy_lineage=tuple(doc["strategy_lineage"]),
            schema_id=doc["schema_id"],
            audit_verdict=doc["audit_verdict"],
        )


def gate_seed(
    sql: str, backend, gate: SeedGate, exec_config: ExecutorConfig | None = None
) -> GateDecision:
    """Accept or reject a seed. Rejection is a value with exactly one primary
    reason, checked in order: parse, execution, empty result, complexity."""
    exec_config = exec_config or ExecutorConfig(
        timeout_seconds=300.0, warmup_runs=0, measured_runs=1
    )
    try:
        tree = parse(sql)
    except ParseError as exc:
        return GateDecision(False, "parse_error", str(exc))
    outcome = execute(sql, backend, exec_config)
    if outcome.status is not Status.OK:
        detail = outcome.error_message or f"status={outcome.status.value}"
        return GateDecision(False, "execution_error", detail)
    if gate.require_nonempty_result and not outcome.row_count:
        return GateDecision(False, "empty_result", "seed returned zero rows")
    profile = complexity_profile(tree)
    shortfalls = []
    if profile.predicate_count < gate.min_predicates:
        shortfalls.append(f"predicates {profile.predicate_count} < {gate.min_predicates}")
    if profile.join_count < gate.min_joins:
        shortfalls.append(f"joins {profile.join_count} < {gate.min_joins}")
    if profile.subquery_count < gate.min_subqueries:
        shortfalls.append(f"subqueries {profile.subquery_count} < {gate.min_subqueries}")
    if shortfalls:
        return GateDecision(False, "below_complexity", "; ".join(shortfalls))
    return GateDecision(True, "ok", t0=outcome.latency_seconds, h0=outcome.result_hash)


def harvest(tree: SearchTree, min_ratio: float = 2.0) -> list[CorpusRecord]:
    """One record per verified node at or above the slowdown threshold,
    in stable node-id order. Timeout nodes are excluded: their equivalence
    is unverifiable."""
    records: list[CorpusRecord] = []
    for node in tree.nodes:
        if node.parent is None or node.outcome is None:
            continue
        if node.phi != 1 or node.outcome.status is not Status.OK:
            continue
        ratio = node.outcome.latency_seconds / tree.t0
        if ratio < min_ratio:
            continue
        records.append(
            CorpusRecord(
                seed_sql=tree.seed_sql,
                slow_sql=node.sql,
                seed_latency=tree.t0,
                slow_latency=node.outcome.latency_seconds,
                slowdown_ratio=ratio,
                strategy_lineage=tuple(node.history),
                schema_id=tree.schema_id,
            )
        )
    return records


def _load_audit_template() -> str:
    return (importlib.resources.files("slowforge") / "templates" / "audit.txt").read_text()


def audit(record: CorpusRecord, auditor=None) -> CorpusRecord:
    """Decide whether slowness stems from structural complexity rather than
    syntactic noise. With a model auditor, the verdict is parsed from its
    reply; offline, records whose entire lineage is pure-noise strategies
    are dropped. An unavailable auditor leaves the record retained and
    flagged unaudited."""
    if auditor is None:
        lineage = set(record.strategy_lineage)
        if lineage and lineage <= NOISE_STRATEGY_IDS:
            return replace(record, audit_verdict=DROPPED)
        return replace(record, audit_verdict=KEPT)
    prompt = _load_audit_template().format(
        seed_sql=record.seed_sql,
        slow_sql=record.slow_sql,
        lineage=", ".join(record.strategy_lineage) or "(free-form only)",
    )
    try:
        reply = auditor.complete(prompt)
    except Exception:
        return replace(record, audit_verdict=UNAUDITED)
    verdict = _parse_verdict(reply)
    if verdict is None:
        return replace(record, audit_verdict=UNAUDITED)
    return replace(record, audit_verdict=verdict)


def _parse_verdict(reply: str) -> str | None:
    lowered = reply.lower()
    drop_at = lowered.find("drop")
    keep_at = lowered.find("keep")
    if drop_at < 0 and keep_at < 0:
        return None
    if drop_at < 0:
        return KEPT
    if keep_at < 0:
        return DROPPED
    return DROPPED if drop_at < keep_at else KEPT


@dataclass(frozen=True, slots=True)
class CorpusStats:
    record_count: int
    mean_token_count: float | None
    mean_predicate_count: float | None
    mean_subquery_count: float | None

    def to_json(self) -> dict:
        return {
            "record_count": self.record_count,
            "mean_token_count": self.mean_token_count,
            "mean_predicate_count": self.mean_predicate_count,
            "mean_subquery_count": self.mean_subquery_count,
        }


def corpus_stats(records: Iterable[CorpusRecord]) -> CorpusStats:
    profiles = [complexity_profile(parse(r.slow_sql)) for r in records]
    if not profiles:
        return CorpusStats(0, None, None, None)
    n = len(profiles)
    return CorpusStats(
        record_count=n,
        mean_token_count=sum(p.token_count for p in profiles) / n,
        mean_predicate_count=sum(p.predicate_count for p in profiles) / n,
        mean_subquery_count=sum(p.subquery_count for p in profiles) / n,
    )


def complexity_sort_key(record: CorpusRecord) -> int:
    """Reconstructed complexity ranking: predicates + 2*subqueries + joins."""
    p = complexity_profile(parse(record.slow_sql))
    return p.predicate_count + 2 * p.subquery_count + p.join_count


def export_sft(
    records: Iterable[CorpusRecord],
    schema_ddl: str,
    plans: dict[str, str] | None = None,
) -> list[str]:
    """JSON-lines records for downstream distillation: schema, the slow query,
    its plan, the seed, and an empty completion slot. Records with no plan are
    flagged and carry a null plan."""
    plans = plans or {}
    lines = []
    for r in records:
        plan = plans.get(r.slow_sql)
        doc = {
            "schema": schema_ddl,
            "slow_sql": r.slow_sql,
            "plan": plan,
            "seed_sql": r.seed_sql,
            "completion": "",
            "plan_missing": plan is None,
        }
        lines.append(json.dumps(doc, sort_keys=True))
    return lines


# -- corpus file I/O ------------------------------------------------------------


def write_corpus(records: Iterable[CorpusRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"version": CORPUS_VERSION, "kind": "slow-query-corpus"}) + "\n")
        for r in records:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def read_corpus(path) -> list[CorpusRecord]:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("version") != CORPUS_VERSION or header.get("kind") != "slow-query-corpus":
            raise ValueError("not a version-1 corpus file")
        return [CorpusRecord.from_json(json.loads(line)) for line in fh if line.strip()]
