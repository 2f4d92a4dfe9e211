"""End-to-end generation pipeline: gate seeds, search, harvest, audit,
and summarize. The service layer and CLI are thin wrappers over this."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import PipelineConfig
from .corpus import (
    DROPPED,
    CorpusRecord,
    CorpusStats,
    audit,
    corpus_stats,
    gate_seed,
    harvest,
)
from .executor import PostgresBackend, SimulatedBackend
from .mutate import Mutator
from .search import SearchTree, run_search


class BackendUnavailable(Exception):
    pass


def make_backend(simulate: bool, dsn: str | None):
    if simulate:
        return SimulatedBackend()
    if not dsn:
        raise BackendUnavailable("need --simulate or a DSN")
    try:
        return PostgresBackend(dsn)
    except Exception as exc:
        raise BackendUnavailable(f"cannot reach backend: {exc}") from exc


@dataclass(frozen=True, slots=True)
class SeedReport:
    seed_sql: str
    accepted: bool
    reason: str
    detail: str = ""
    t0: float | None = None
    iterations: int = 0
    nodes: int = 0
    harvested: int = 0
    kept: int = 0
    dropped: int = 0

    def to_json(self) -> dict:
        return {
            "seed_sql": self.seed_sql,
            "accepted": self.accepted,
            "reason": self.reason,
            "detail": self.detail,
            "t0": self.t0,
            "iterations": self.iterations,
            "nodes": self.nodes,
            "harvested": self.harvested,
            "kept": self.kept,
            "dropped": self.dropped,
        }


@dataclass(slots=True)
class GenerateResult:
    records: list[CorpusRecord] = field(default_factory=list)
    seed_reports: list[SeedReport] = field(default_factory=list)
    stats: CorpusStats | None = None
    checkpoints: dict[str, dict] = field(default_factory=dict)


def generate_corpus(
    seeds: list[str],
    backend,
    cfg: PipelineConfig,
    model_client=None,
    auditor=None,
    checkpoints: dict[str, dict] | None = None,
) -> GenerateResult:
    """Gate each seed, evolve it, harvest verified slowdowns meeting the
    slowdown threshold, audit them, and collect kept records plus per-seed
    reports and resumable checkpoints (keyed by seed index)."""
    result = GenerateResult()
    mutator = Mutator(model_client=model_client)
    checkpoints = checkpoints or {}

    for index, seed_sql in enumerate(seeds):
        decision = gate_seed(seed_sql, backend, cfg.seed_gate, cfg.executor)
        if not decision.accepted:
            result.seed_reports.append(
                SeedReport(seed_sql, False, decision.reason, decision.detail)
            )
            continue
        resume = None
        prior = checkpoints.get(str(index))
        if prior is not None:
            resume = SearchTree.from_json(prior)
        tree = run_search(
            seed_sql,
            backend,
            cfg.search,
            mutator,
            exec_config=cfg.executor,
            resume=resume,
        )
        harvested = harvest(tree, cfg.min_slowdown_ratio)
        audited = [audit(r, auditor) for r in harvested]
        kept = [r for r in audited if r.audit_verdict != DROPPED]
        result.records.extend(kept)
        result.checkpoints[str(index)] = tree.to_json()
        result.seed_reports.append(
            SeedReport(
                seed_sql=tree.seed_sql,
                accepted=True,
                reason="ok",
                t0=tree.t0,
                iterations=tree.iterations_done,
                nodes=len(tree.nodes),
                harvested=len(harvested),
                kept=len(kept),
                dropped=len(audited) - len(kept),
            )
        )

    result.stats = corpus_stats(result.records)
    return result
