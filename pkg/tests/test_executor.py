import os
import random

import pytest

from slowforge.executor import (
    EMPTY_RESULT_DIGEST,
    DispatchQueueFull,
    Dispatcher,
    ExecutionOutcome,
    ExecutorConfig,
    ResultCache,
    SimulatedBackend,
    Status,
    execute,
    fixture_path,
    load_workload,
    result_hash,
    validity,
)
from slowforge.executor.costmodel import CostParams, extract_features
from slowforge.sqltree import parse


@pytest.fixture(scope="module")
def backend():
    be = SimulatedBackend()
    yield be
    be.close()


@pytest.fixture()
def config():
    return ExecutorConfig(timeout_seconds=120.0, warmup_runs=1, measured_runs=3)


# -- result hashing ---------------------------------------------------------


def test_hash_invariant_under_row_order():
    rows = [(1, "a"), (2, "b")]
    assert result_hash(rows) == result_hash(list(reversed(rows)))


def test_hash_invariance_under_100_random_permutations():
    rng = random.Random(8251)
    rows = [(i, f"name_{i}", i * 1.5, None if i % 7 == 0 else "x") for i in range(40)]
    reference = result_hash(rows)
    for _ in range(100):
        shuffled = rows[:]
        rng.shuffle(shuffled)
        assert result_hash(shuffled) == reference


def test_single_cell_perturbation_changes_hash():
    rng = random.Random(4097)
    for _ in range(100):
        rows = [
            (rng.randint(0, 50), f"v{rng.randint(0, 30)}", rng.randint(0, 5) * 0.5)
            for _ in range(12)
        ]
        base = result_hash(rows)
        i = rng.randrange(len(rows))
        row = list(rows[i])
        row[1] = row[1] + "_changed"
        mutated = rows[:i] + [tuple(row)] + rows[i + 1 :]
        assert result_hash(mutated) != base


def test_empty_result_sentinel():
    assert result_hash([]) == EMPTY_RESULT_DIGEST


def test_type_prefixes_distinguish_cells():
    assert result_hash([(1,)]) != result_hash([(1.0,)])
    assert result_hash([(1,)]) != result_hash([("1",)])
    assert result_hash([(None,)]) != result_hash([("",)])
    assert result_hash([(True,)]) == result_hash([(1,)])  # bools land as ints


# -- execute protocol ---------------------------------------------------------


def test_simple_query_ok(backend, config):
    out = execute("SELECT 1", backend, config)
    assert out.status is Status.OK
    assert out.row_count == 1
    assert out.result_hash is not None
    assert out.latency_seconds <= config.timeout_seconds


def test_timeout_when_cost_exceeds_budget(backend):
    tight = ExecutorConfig(timeout_seconds=0.001, warmup_runs=0, measured_runs=1)
    out = execute("SELECT * FROM order_items", backend, tight)
    assert out.status is Status.TIMEOUT
    assert out.result_hash is None
    assert out.latency_seconds == tight.timeout_seconds


def test_error_surfaces_backend_message(backend, config):
    out = execute("SELECT nope FROM missing_table", backend, config)
    assert out.status is Status.ERROR
    assert out.result_hash is None
    assert "missing_table" in (out.error_message or "")


def test_outcome_invariant_hash_iff_ok():
    with pytest.raises(ValueError):
        ExecutionOutcome(Status.ERROR, 0.1, result_hash=5)
    with pytest.raises(ValueError):
        ExecutionOutcome(Status.OK, 0.1, result_hash=None)


# -- validity ------------------------------------------------------------------


def test_validity_truth_table(backend, config):
    seed = execute("SELECT region FROM customers WHERE region = 'west'", backend, config)
    assert seed.status is Status.OK and seed.result_hash is not None
    same = execute(
        "SELECT region FROM customers WHERE region = 'west' ORDER BY region", backend, config
    )
    assert validity(same, seed.result_hash) == 1
    different = execute("SELECT region FROM customers", backend, config)
    assert validity(different, seed.result_hash) == 0
    error = execute("SELECT x FROM missing_table", backend, config)
    assert validity(error, seed.result_hash) == 0
    timeout = ExecutionOutcome(Status.TIMEOUT, 1.0)
    assert validity(timeout, seed.result_hash) == 0


def test_phi_zero_for_any_non_ok_status():
    rng = random.Random(5)
    for _ in range(50):
        status = rng.choice([Status.ERROR, Status.TIMEOUT])
        out = ExecutionOutcome(status, rng.random())
        assert validity(out, rng.getrandbits(64)) == 0


# -- dispatch / cache -----------------------------------------------------------


def test_dispatch_equals_synchronous_execute(backend, config):
    sql = "SELECT name FROM products WHERE price > 200"
    direct = execute(sql, backend, config)
    dispatcher = Dispatcher(backend, config)
    ticket = dispatcher.dispatch(sql)
    assert dispatcher.await_outcome(ticket) == direct
    dispatcher.close()


def test_duplicate_dispatches_coalesce(config):
    be = SimulatedBackend()
    dispatcher = Dispatcher(be, ExecutorConfig(timeout_seconds=60, warmup_runs=0, measured_runs=1))
    before = be.calls
    t1 = dispatcher.dispatch("SELECT count(*) FROM stores")
    t2 = dispatcher.dispatch("select   COUNT(*) from STORES")  # same fingerprint
    out1 = dispatcher.await_outcome(t1)
    out2 = dispatcher.await_outcome(t2)
    assert out1 == out2
    assert be.calls - before == 1
    dispatcher.close()
    be.close()


def test_cache_hit_makes_zero_backend_calls(config):
    be = SimulatedBackend()
    dispatcher = Dispatcher(be, ExecutorConfig(timeout_seconds=60, warmup_runs=0, measured_runs=1))
    dispatcher.await_outcome(dispatcher.dispatch("SELECT count(*) FROM products"))
    calls = be.calls
    again = dispatcher.dispatch("SELECT count(*) FROM products")
    assert again.done()
    dispatcher.await_outcome(again)
    assert be.calls == calls
    dispatcher.close()
    be.close()


def test_queue_full_signals_backpressure(backend, config):
    dispatcher = Dispatcher(backend, config, max_in_flight=0)
    with pytest.raises(DispatchQueueFull):
        dispatcher.dispatch("SELECT 1")
    # Backpressure path: synchronous execution still lands in the cache.
    out = dispatcher.execute_sync("SELECT 1")
    assert out.status is Status.OK
    dispatcher.close()


def test_cache_single_completion():
    cache = ResultCache()
    first = ExecutionOutcome(Status.OK, 1.0, result_hash=1, row_count=1)
    second = ExecutionOutcome(Status.OK, 2.0, result_hash=2, row_count=2)
    assert cache.complete(42, first) == first
    assert cache.complete(42, second) == first  # completed entries immutable
    assert cache.get(42) == first


# -- simulator cost model ---------------------------------------------------------


def test_self_wrap_multiplies_latency_by_nesting_factor(backend):
    base = backend.latency_of("SELECT name FROM products WHERE price > 10")
    wrapped = backend.latency_of(
        "SELECT * FROM (SELECT name FROM products WHERE price > 10) AS w"
    )
    assert wrapped == pytest.approx(base * CostParams().nesting_factor)


def test_correlated_subquery_multiplies_latency_by_three(backend):
    join_sql = "SELECT c.name FROM customers c JOIN stores s ON c.region = s.region"
    inverted = (
        "SELECT c.name FROM customers c "
        "WHERE EXISTS (SELECT 1 FROM stores s WHERE s.region = c.region)"
    )
    base = backend.latency_of(join_sql)
    slowed = backend.latency_of(inverted)
    assert slowed == pytest.approx(base * CostParams().correlated_subquery_factor)


def test_latency_monotone_in_each_feature(backend):
    q = "SELECT name FROM products WHERE price > 10"
    variants = [
        "SELECT * FROM (SELECT name FROM products WHERE price > 10) AS w",
        "SELECT DISTINCT name FROM products WHERE price > 10",
        "SELECT name FROM products WHERE price > 10 OR price > 11",
        "SELECT name FROM products WHERE NOT (price <= 10)",
        "SELECT name FROM products WHERE price > (SELECT 10)",
    ]
    base = backend.latency_of(q)
    for v in variants:
        assert backend.latency_of(v) > base


def test_feature_extraction_counts(backend):
    tree = parse(
        "SELECT DISTINCT c.name FROM customers c "
        "WHERE EXISTS (SELECT 1 FROM orders o WHERE o.customer_id = c.customer_id) "
        "AND (c.region = 'west' OR c.region = 'east' OR c.region = 'north')"
    )
    f = extract_features(tree, backend.table_rows)
    assert f.correlated_subqueries == 1
    assert f.sort_units == 1
    assert f.extra_or_terms == 2
    assert f.scanned_rows == backend.table_rows["customers"] + backend.table_rows["orders"]


# -- differential workload ------------------------------------------------------------


def test_differential_workload_on_simulator(backend, config):
    statements = load_workload(fixture_path("workload.sql").read_text())
    assert len(statements) == 20
    hashes = []
    for sql in statements:
        out = execute(sql, backend, config)
        assert out.status is Status.OK, f"{sql}: {out.error_message}"
        assert out.row_count and out.row_count > 0
        hashes.append(out.result_hash)
    # Stable across re-execution.
    again = [execute(sql, backend, config).result_hash for sql in statements]
    assert hashes == again


@pytest.mark.skipif(
    not os.environ.get("DATABASE_URL"),
    reason="real-DBMS differential leg needs DATABASE_URL",
)
def test_differential_workload_against_real_dbms(backend, config):
    from slowforge.executor import PostgresBackend

    pg = PostgresBackend(os.environ["DATABASE_URL"])
    try:
        pg.run("DROP TABLE IF EXISTS order_items", 60)
        for table in ("orders", "products", "customers", "stores"):
            pg.run(f"DROP TABLE IF EXISTS {table}", 60)
        for stmt in load_workload(fixture_path("schema.sql").read_text()):
            pg.run(stmt, 60)
        for stmt in load_workload(fixture_path("data.sql").read_text()):
            pg.run(stmt, 60)
        for sql in load_workload(fixture_path("workload.sql").read_text()):
            sim = execute(sql, backend, config)
            real = execute(sql, pg, config)
            assert real.status is Status.OK, f"{sql}: {real.error_message}"
            assert real.result_hash == sim.result_hash, sql
    finally:
        pg.close()
