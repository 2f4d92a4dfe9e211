import json

import pytest

from slowforge.corpus import (
    DROPPED,
    KEPT,
    UNAUDITED,
    CorpusRecord,
    SeedGate,
    audit,
    complexity_sort_key,
    corpus_stats,
    export_sft,
    gate_seed,
    harvest,
    read_corpus,
    write_corpus,
)
from slowforge.executor import ExecutorConfig, SimulatedBackend
from slowforge.mutate import MockModelClient, Mutator
from slowforge.search import MctsConfig, run_search

SEED = (
    "SELECT o.order_id, o.total FROM orders o "
    "JOIN customers c ON o.customer_id = c.customer_id WHERE o.total > 500"
)


@pytest.fixture(scope="module")
def backend():
    be = SimulatedBackend()
    yield be
    be.close()


@pytest.fixture(scope="module")
def searched(backend):
    cfg = MctsConfig(iterations=60, rng_seed=7)
    return run_search(
        SEED,
        backend,
        cfg,
        Mutator(),
        ExecutorConfig(timeout_seconds=300.0, warmup_runs=0, measured_runs=1),
    )


def _record(lineage=("self_wrap",), ratio=2.5, verdict=UNAUDITED):
    return CorpusRecord(
        seed_sql="SELECT 1",
        slow_sql="SELECT * FROM (SELECT 1) AS w",
        seed_latency=1.0,
        slow_latency=ratio,
        slowdown_ratio=ratio,
        strategy_lineage=tuple(lineage),
        schema_id="retail_v1",
        audit_verdict=verdict,
    )


# -- seed gate -----------------------------------------------------------------


def test_gate_rejects_trivial_query_for_complexity(backend):
    decision = gate_seed("SELECT 1", backend, SeedGate(min_predicates=4))
    assert not decision.accepted
    assert decision.reason == "below_complexity"


def test_gate_rejects_parse_failure(backend):
    decision = gate_seed("SELEC 1", backend, SeedGate())
    assert decision.reason == "parse_error"


def test_gate_rejects_execution_error(backend):
    decision = gate_seed("SELECT x FROM missing_table", backend, SeedGate(0, 0, 0))
    assert decision.reason == "execution_error"
    assert "missing_table" in decision.detail


def test_gate_rejects_empty_results(backend):
    sql = (
        "SELECT c.name FROM customers c JOIN orders o ON c.customer_id = o.customer_id "
        "JOIN stores s ON o.store_id = s.store_id "
        "WHERE c.region = 'atlantis' AND o.total > 1 AND o.status = 'placed' "
        "AND c.customer_id IN (SELECT customer_id FROM orders)"
    )
    decision = gate_seed(sql, backend, SeedGate())
    assert decision.reason == "empty_result"
    relaxed = gate_seed(sql, backend, SeedGate(require_nonempty_result=False))
    assert relaxed.accepted


def test_gate_accepts_fixture_seed_with_baseline(backend):
    decision = gate_seed(SEED, backend, SeedGate(min_predicates=2, min_joins=1, min_subqueries=0))
    assert decision.accepted
    assert decision.reason == "ok"
    assert decision.t0 is not None and decision.t0 > 0
    assert decision.h0 is not None


def test_gate_thresholds_must_be_nonnegative():
    with pytest.raises(ValueError):
        SeedGate(min_predicates=-1)


# -- harvest ---------------------------------------------------------------------


def test_harvest_threshold_is_inclusive(searched):
    records = harvest(searched, min_ratio=2.0)
    assert records, "search should have produced verified slowdowns"
    for r in records:
        assert r.slowdown_ratio >= 2.0
        assert r.seed_sql == searched.seed_sql
        assert r.schema_id == "retail_v1"


def test_harvest_excludes_below_threshold_and_respects_ratio(searched):
    at_two = {r.slow_sql for r in harvest(searched, min_ratio=2.0)}
    at_p9 = {r.slow_sql for r in harvest(searched, min_ratio=1.9)}
    assert at_two <= at_p9
    for r in harvest(searched, min_ratio=1.9):
        if r.slowdown_ratio < 2.0:
            assert r.slow_sql not in at_two


def test_harvest_is_idempotent_and_order_stable(searched):
    first = harvest(searched, min_ratio=2.0)
    second = harvest(searched, min_ratio=2.0)
    assert first == second


def test_harvest_only_verified_nodes(searched):
    records = harvest(searched, min_ratio=2.0)
    by_sql = {n.sql: n for n in searched.nodes}
    for r in records:
        node = by_sql[r.slow_sql]
        assert node.phi == 1
        assert node.outcome.status.value == "ok"


# -- audit -------------------------------------------------------------------------


def test_heuristic_drops_pure_noise_lineage():
    assert audit(_record(lineage=("self_wrap",))).audit_verdict == DROPPED
    assert audit(_record(lineage=("subquery_orderby", "self_wrap"))).audit_verdict == DROPPED


def test_heuristic_keeps_structural_lineage():
    assert audit(_record(lineage=("equi_join_to_exists", "self_wrap"))).audit_verdict == KEPT
    assert audit(_record(lineage=())).audit_verdict == KEPT  # free-form only


def test_mock_auditor_verdicts():
    assert audit(_record(), auditor=MockModelClient(["DROP"])).audit_verdict == DROPPED
    assert audit(_record(), auditor=MockModelClient(["keep it"])).audit_verdict == KEPT


def test_unavailable_auditor_retains_record_unaudited():
    result = audit(_record(), auditor=MockModelClient([]))  # script exhausted -> raises
    assert result.audit_verdict == UNAUDITED


def test_gibberish_auditor_reply_is_unaudited():
    assert audit(_record(), auditor=MockModelClient(["???"])).audit_verdict == UNAUDITED


# -- stats and export ------------------------------------------------------------------


def test_empty_corpus_stats_flag_absent_means():
    stats = corpus_stats([])
    assert stats.record_count == 0
    assert stats.mean_token_count is None
    assert stats.mean_predicate_count is None


def test_single_record_stats_equal_its_profile():
    record = _record()
    stats = corpus_stats([record])
    assert stats.record_count == 1
    assert stats.mean_predicate_count == 0.0
    assert stats.mean_subquery_count == 1.0  # one derived table in the wrapper


def test_stats_means_match_hand_computation():
    a = CorpusRecord("s", "SELECT x FROM t WHERE a > 1", 1, 2, 2, (), "s1")
    b = CorpusRecord("s", "SELECT x FROM t WHERE a > 1 AND b IN (SELECT c FROM u)", 1, 2, 2, (), "s1")
    stats = corpus_stats([a, b])
    # a: one atom (a > 1); b: two atoms (a > 1, b IN ...).
    assert stats.mean_predicate_count == pytest.approx((1 + 2) / 2)
    assert stats.mean_subquery_count == pytest.approx((0 + 1) / 2)


def test_complexity_sort_key():
    simple = _record()
    complex_record = CorpusRecord(
        "s",
        "SELECT x FROM t JOIN u ON t.a = u.a WHERE t.b > 1 AND t.c IN (SELECT c FROM v)",
        1,
        2,
        2,
        (),
        "s1",
    )
    assert complexity_sort_key(complex_record) > complexity_sort_key(simple)


def test_export_sft_emits_json_lines_with_populated_fields():
    record = _record()
    lines = export_sft([record], "CREATE TABLE t (x INTEGER);", {record.slow_sql: "SCAN t"})
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["schema"] and doc["slow_sql"] and doc["plan"] and doc["seed_sql"]
    assert doc["completion"] == ""
    assert doc["plan_missing"] is False


def test_export_sft_flags_missing_plan():
    doc = json.loads(export_sft([_record()], "ddl", {})[0])
    assert doc["plan"] is None
    assert doc["plan_missing"] is True


def test_export_roundtrip_preserves_fields():
    record = _record()
    line = export_sft([record], "ddl", {})[0]
    assert json.loads(json.dumps(json.loads(line))) == json.loads(line)


# -- corpus files ----------------------------------------------------------------------


def test_corpus_file_roundtrip(tmp_path):
    records = [_record(), _record(lineage=("equi_join_to_exists",), ratio=3.25)]
    path = tmp_path / "corpus.jsonl"
    write_corpus(records, path)
    lines = path.read_text().splitlines()
    assert json.loads(lines[0])["kind"] == "slow-query-corpus"
    assert read_corpus(path) == records


def test_corpus_file_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"version": 99}\n')
    with pytest.raises(ValueError):
        read_corpus(path)
