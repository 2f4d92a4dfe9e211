"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one PASS line on success (run with ``pytest -s`` to see them
inline); a failed assertion is the corresponding FAIL. Runtime budgets are
asserted inside the tests that carry them.
"""

import json
import math
import os
import random
import time

import numpy as np
import pytest

from slowforge.bench import nearest_rank, run_bench
from slowforge.config import PipelineConfig
from slowforge.corpus import write_corpus
from slowforge.executor import (
    CostParams,
    Dispatcher,
    ExecutorConfig,
    SimulatedBackend,
    Status,
    execute,
    fixture_path,
    load_workload,
    result_hash,
)
from slowforge.kernel import (
    CandidateOutcome,
    RewardConfig,
    allocate_budget,
    anchored_advantage,
    asymmetric_scale,
    hierarchical_reward,
    policy_objective_terms,
    rollout_weights,
    PilotStats,
)
from slowforge.mutate import MockModelClient, Mutator
from slowforge.pipeline import generate_corpus
from slowforge.repair import repair_loop, verify
from slowforge.search import MctsConfig
from slowforge.sqltree import (
    SqlTree,
    parse,
    structural_distance,
    tree_edit_distance,
)

from .oracles import oracle_ted, random_tree


def _ok(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}")


@pytest.fixture(scope="module")
def backend():
    be = SimulatedBackend()
    yield be
    be.close()


def test_anchored_advantage_suite():
    started = time.monotonic()
    rng = random.Random(770001)

    for _ in range(1000):
        group = rng.randint(2, 16)
        rewards = np.array([rng.uniform(-3, 3) for _ in range(group)])
        lam = rng.random()
        cfg = RewardConfig(lambda_mix=lam, baseline_b=rng.uniform(-1, 1), scale_s=3.0)
        advantage = anchored_advantage(rewards, cfg)
        assert abs(advantage.mean()) < 1e-9  # zero-sum
        kappa = (1 - lam) / (rewards.std() + cfg.epsilon) + lam * math.sqrt(group) / cfg.scale_s
        closed_form = (rewards - rewards.mean()) * kappa
        assert np.max(np.abs(advantage - closed_form)) < 1e-9

    plain = np.array([0.25, -1.75, 2.5, 0.0, -0.5])
    z_cfg = RewardConfig(lambda_mix=0.0)
    z_expected = (plain - plain.mean()) / (plain.std() + z_cfg.epsilon)
    assert np.max(np.abs(anchored_advantage(plain, z_cfg) - z_expected)) < 1e-12

    worked = anchored_advantage([-3.0, -3.0, -3.0, -0.5], RewardConfig(lambda_mix=0.5))
    assert np.max(np.abs(worked[:3] - (-0.4971))) < 1e-3
    assert abs(worked[3] - 1.4911) < 1e-3
    assert worked[3] < 1.7321  # anchor suppresses the lucky survivor

    elapsed = time.monotonic() - started
    assert elapsed < 5.0
    _ok(
        "anchored advantage: zero-sum < 1e-9 and closed form < 1e-9 on 1000 groups, "
        f"z-score reduction, worked example within 1e-3 ({elapsed:.2f}s)"
    )


def test_reward_suite():
    cfg = RewardConfig()
    assert cfg.rho_fmt < cfg.rho_exe < cfg.rho_sem < 0
    with pytest.raises(ValueError):
        RewardConfig(rho_fmt=-1.0, rho_exe=-2.0, rho_sem=-3.0)

    assert asymmetric_scale(7.5, 7.5, cfg.eta) == 0.0  # F(T0, T0) exactly zero

    rng = random.Random(5150)
    for _ in range(2000):
        value = asymmetric_scale(rng.uniform(1e-3, 100), rng.uniform(1e-3, 100), cfg.eta)
        assert -1.0 < value <= cfg.eta

    grid = np.linspace(0.01, 10.0, 1000)
    values = [asymmetric_scale(float(t), 1.0, cfg.eta) for t in grid]
    assert all(a > b for a, b in zip(values, values[1:]))

    assert abs(3 * math.tanh(1) - 2.28478) < 1e-5
    speedup = CandidateOutcome(True, True, True, latency=1.0, baseline_latency=math.e)
    assert abs(hierarchical_reward(speedup, cfg) - 2.28478) < 1e-5
    assert abs(asymmetric_scale(math.e, 1.0, cfg.eta) - (-0.761594)) < 1e-5

    _ok(
        "reward: penalty hierarchy enforced, F(T0,T0)=0, range in (-1, eta], "
        "monotone on 1000-point grid, spot values within 1e-5"
    )


def test_rollout_suite():
    rng = random.Random(31001)
    for _ in range(1000):
        prompts = rng.randint(1, 10)
        weights = [rng.uniform(0, 4) for _ in range(prompts)]
        pilot = rng.randint(0, 3)
        extra = rng.randint(0, 80)
        plan = allocate_budget(weights, prompts * pilot + extra, pilot)
        assert sum(plan.allocations) == extra

    worked = allocate_budget([2 / 3, 1 / 3, 0.0], total_budget=12, pilot_size=0)
    assert worked.allocations == (8, 4, 0)

    cfg = RewardConfig()
    pilots = [
        PilotStats(max_reward=-2.6, entropy=1.0, reward_variance=0.5),  # failed
        PilotStats(max_reward=-0.2, entropy=1.0, reward_variance=0.5),  # same H/var, ok
        PilotStats(max_reward=0.4, entropy=0.0, reward_variance=0.0),
    ]
    weights = rollout_weights(pilots, cfg)
    assert weights[0] > weights[1]
    plan = allocate_budget(list(weights), total_budget=30, pilot_size=2)
    assert plan.allocations[0] >= plan.allocations[1]

    _ok(
        "rollout: allocations sum to remaining budget on 1000 instances, "
        "worked example [8,4,0], failure detector outranks identical-stats prompts"
    )


def test_ted_suite():
    started = time.monotonic()
    rng = random.Random(880002)
    for _ in range(200):
        a = random_tree(rng, 8)
        b = random_tree(rng, 8)
        production = tree_edit_distance(a, b)
        assert production == oracle_ted(a, b)  # exact agreement
        assert production == tree_edit_distance(b, a)  # symmetry
        ta, tb = SqlTree(a), SqlTree(b)
        delta = structural_distance(ta, tb)
        assert 0.0 <= delta <= 1.0
        assert structural_distance(ta, ta) == 0.0
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    _ok(
        "tree edit distance: exact oracle agreement, symmetry, and bounded "
        f"normalization on 200 random pairs ({elapsed:.2f}s)"
    )


def test_mcts_suite(backend, tmp_path):
    started = time.monotonic()
    seeds = load_workload(fixture_path("seeds.sql").read_text())
    assert len(seeds) == 5
    cfg = PipelineConfig(
        search=MctsConfig(iterations=200, rng_seed=2024),
        executor=ExecutorConfig(timeout_seconds=300.0, warmup_runs=0, measured_runs=1),
    )

    first = generate_corpus(seeds, backend, cfg)
    for report in first.seed_reports:
        assert report.accepted, f"seed rejected: {report.reason} {report.detail}"
        assert report.iterations == 200
        assert report.kept >= 1, f"no harvested record for seed: {report.seed_sql[:60]}"
    for record in first.records:
        assert record.slowdown_ratio >= 2.0

    # N(root) = iterations, per checkpoint.
    for checkpoint in first.checkpoints.values():
        root = next(n for n in checkpoint["nodes"] if n["parent_id"] is None)
        assert root["n"] == 200

    second = generate_corpus(seeds, backend, cfg)
    path_a, path_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_corpus(first.records, path_a)
    write_corpus(second.records, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()

    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    _ok(
        "mcts: 200-iteration run over 5 seeds harvests a verified 2x record per "
        f"seed, N(root)=iterations, rerun byte-identical ({elapsed:.2f}s, "
        f"{len(first.records)} records)"
    )


def test_executor_suite(backend):
    rng = random.Random(443322)
    rows = [(i, f"label_{i % 9}", i * 0.75, None if i % 5 == 0 else i) for i in range(50)]
    reference = result_hash(rows)
    for _ in range(100):
        shuffled = rows[:]
        rng.shuffle(shuffled)
        assert result_hash(shuffled) == reference

    for _ in range(100):
        target = rng.randrange(len(rows))
        row = list(rows[target])
        row[2] = row[2] + 0.0001
        mutated = rows[:target] + [tuple(row)] + rows[target + 1 :]
        assert result_hash(mutated) != reference

    config = ExecutorConfig(timeout_seconds=120.0, warmup_runs=0, measured_runs=1)
    sql = "SELECT c.region, count(*) AS n FROM customers c GROUP BY c.region"
    direct = execute(sql, backend, config)
    dispatcher = Dispatcher(backend, config)
    via_cache = dispatcher.await_outcome(dispatcher.dispatch(sql))
    assert via_cache == direct
    dispatcher.close()

    statements = load_workload(fixture_path("workload.sql").read_text())
    assert len(statements) == 20
    sim_hashes = {}
    for workload_sql in statements:
        outcome = execute(workload_sql, backend, config)
        assert outcome.status is Status.OK, f"{workload_sql}: {outcome.error_message}"
        sim_hashes[workload_sql] = outcome.result_hash

    real_leg = "ran"
    if os.environ.get("DATABASE_URL"):
        from slowforge.executor import PostgresBackend

        pg = PostgresBackend(os.environ["DATABASE_URL"])
        try:
            for workload_sql in statements:
                real = execute(workload_sql, pg, config)
                assert real.status is Status.OK
                assert real.result_hash == sim_hashes[workload_sql], workload_sql
        finally:
            pg.close()
    else:
        real_leg = "skipped (no DATABASE_URL)"

    _ok(
        "executor: hash order-invariance (100 permutations), perturbation "
        "sensitivity (100 trials), dispatch/await == sync, simulator "
        f"differential leg ran on 20 queries, real-DBMS leg {real_leg}"
    )


def test_repair_suite(backend):
    base = [f"SELECT name FROM customers WHERE customer_id = {i}" for i in range(1, 21)]
    for i, good in enumerate(base):
        broken = good.replace("SELECT", "SELEC") if i % 2 == 0 else good.replace("WHERE", "WHRE")
        fixer = MockModelClient([f"```sql\n{good}\n```"])
        outcome = repair_loop(good, broken, backend, fixer, max_rounds=2)
        assert outcome.rounds_used <= 2
        assert verify(outcome.sql, backend).ok

    exhausted = repair_loop(
        base[0],
        "SELECT nothing FROM nowhere",
        backend,
        MockModelClient(["no sql", "still no sql"]),
        max_rounds=2,
    )
    assert exhausted.status == "fallback"
    assert exhausted.sql == base[0]
    assert verify(exhausted.sql, backend).ok

    _ok(
        "repair: 20 injected-fault queries all verify within 2 rounds; "
        "exhaustion returns the original"
    )


def test_bench_suite(backend):
    values = [float(v) for v in range(1, 101)]
    assert nearest_rank(values, 50) == 50.0
    assert nearest_rank(values, 75) == 75.0
    assert nearest_rank(values, 95) == 95.0

    clamp_config = ExecutorConfig(timeout_seconds=300.0, warmup_runs=0, measured_runs=1)
    heavy = SimulatedBackend(cost_params=CostParams(base_seconds=400.0))
    clamped = execute("SELECT 1", heavy, clamp_config)
    heavy.close()
    assert clamped.status is Status.TIMEOUT
    assert clamped.latency_seconds == 300.0

    queries = [f"SELECT name FROM customers WHERE customer_id = {i}" for i in range(1, 11)]
    rewrites = list(queries)
    rewrites[2] = "SELECT name FROM customers WHERE customer_id = 77"
    rewrites[6] = "SELECT region FROM customers WHERE customer_id = 7"
    report = run_bench(
        queries,
        backend,
        ExecutorConfig(timeout_seconds=120.0, warmup_runs=1, measured_runs=3),
        rewrites,
    )
    assert report.equivalence_rate == pytest.approx(0.8)

    _ok(
        "bench: nearest-rank percentiles 50/75/95 on [1..100], timeout clamps "
        "to 300.00, 2-of-10 mismatches give equivalence 0.8"
    )


def test_gradient_check():
    rng = random.Random(99221)
    cfg = RewardConfig(kl_coeff=0.013)
    step = 1e-6
    for _ in range(100):
        tokens = rng.randint(1, 10)
        logratio = [rng.uniform(-1.5, 1.5) for _ in range(tokens)]
        kl = [rng.uniform(0, 1.5) for _ in range(tokens)]
        advantage = rng.uniform(-2, 2)
        for t in range(tokens):
            up, down = logratio.copy(), logratio.copy()
            up[t] += step
            down[t] -= step
            numeric = (
                policy_objective_terms(up, advantage, kl, cfg)
                - policy_objective_terms(down, advantage, kl, cfg)
            ) / (2 * step)
            analytic = -math.exp(logratio[t]) * advantage / tokens
            assert abs(numeric - analytic) < 1e-6
    _ok(
        "gradient: policy-objective partials match central differences within "
        "1e-6 on 100 random instances"
    )
