import json

import pytest

from slowforge.cli import EXIT_BACKEND, EXIT_CONFIG, EXIT_OK, EXIT_ZERO_YIELD, main
from slowforge.corpus import read_corpus
from slowforge.executor import fixture_path

SEED = (
    "SELECT o.order_id, o.total FROM orders o "
    "JOIN customers c ON o.customer_id = c.customer_id WHERE o.total > 500;"
)

GATE_OFF = """\
[seed_gate]
min_predicates = 0
min_joins = 0
min_subqueries = 0

[executor]
timeout_seconds = 300.0
warmup_runs = 0
measured_runs = 1
"""


@pytest.fixture()
def seeds_file(tmp_path):
    path = tmp_path / "seeds.sql"
    path.write_text(SEED + "\n")
    return path


@pytest.fixture()
def gate_off_config(tmp_path):
    path = tmp_path / "pipeline.toml"
    path.write_text(GATE_OFF)
    return path


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def test_generate_writes_corpus_and_stats(tmp_path, seeds_file, gate_off_config, capsys):
    out = tmp_path / "corpus.jsonl"
    stats_out = tmp_path / "stats.json"
    code = run_cli(
        "generate",
        "--seeds", seeds_file,
        "--simulate",
        "--config", gate_off_config,
        "--iterations", 40,
        "--seed", 5,
        "--out", out,
        "--stats-out", stats_out,
    )
    assert code == EXIT_OK
    records = read_corpus(out)
    assert records
    assert all(r.slowdown_ratio >= 2.0 for r in records)
    stats = json.loads(stats_out.read_text())
    assert stats["record_count"] == len(records)
    printed = capsys.readouterr().out
    assert "seed: ok" in printed


def test_generate_empty_seeds_is_zero_yield(tmp_path):
    empty = tmp_path / "seeds.sql"
    empty.write_text("-- nothing here\n")
    code = run_cli("generate", "--seeds", empty, "--simulate", "--out", tmp_path / "c.jsonl")
    assert code == EXIT_ZERO_YIELD


def test_generate_resume_reproduces_identical_corpus(tmp_path, seeds_file, gate_off_config):
    out1 = tmp_path / "one.jsonl"
    out2 = tmp_path / "two.jsonl"
    ckpt = tmp_path / "ckpts"
    common = [
        "generate",
        "--seeds", seeds_file,
        "--simulate",
        "--config", gate_off_config,
        "--iterations", 30,
        "--seed", 13,
        "--checkpoint-dir", ckpt,
    ]
    assert run_cli(*common, "--out", out1) == EXIT_OK
    assert (ckpt / "seed_0.json").exists()
    assert run_cli(*common, "--out", out2, "--resume") == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()


def test_generate_without_backend_choice_fails(tmp_path, seeds_file, monkeypatch):
    monkeypatch.delenv("DATABASE_URL", raising=False)
    code = run_cli("generate", "--seeds", seeds_file, "--out", tmp_path / "c.jsonl")
    assert code == EXIT_CONFIG


def test_generate_with_unreachable_dsn_is_backend_error(tmp_path, seeds_file):
    code = run_cli(
        "generate",
        "--seeds", seeds_file,
        "--dsn", "postgresql://nobody@127.0.0.1:1/void",
        "--out", tmp_path / "c.jsonl",
    )
    assert code == EXIT_BACKEND


def test_generate_bad_config_exits_2(tmp_path, seeds_file):
    bad = tmp_path / "bad.toml"
    bad.write_text("[search]\nwarp = 9\n")
    code = run_cli(
        "generate", "--seeds", seeds_file, "--simulate", "--config", bad,
        "--out", tmp_path / "c.jsonl",
    )
    assert code == EXIT_CONFIG


def test_advantage_worked_example(tmp_path, capsys):
    rewards = tmp_path / "rewards.json"
    rewards.write_text(json.dumps({"rewards": [-3.0, -3.0, -3.0, -0.5]}))
    out = tmp_path / "adv.json"
    assert run_cli("advantage", "--rewards", rewards, "--out", out) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["advantages"][0] == pytest.approx(-0.4971, abs=1e-3)
    assert doc["advantages"][3] == pytest.approx(1.4911, abs=1e-3)


def test_advantage_output_is_byte_stable(tmp_path):
    rewards = tmp_path / "rewards.json"
    rewards.write_text("[0.5, -1.0, 2.0]")
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    run_cli("advantage", "--rewards", rewards, "--out", out1)
    run_cli("advantage", "--rewards", rewards, "--out", out2)
    assert out1.read_bytes() == out2.read_bytes()


def test_rollout_plan_command(tmp_path):
    pilots = tmp_path / "pilots.json"
    pilots.write_text(
        json.dumps(
            [
                {"max_reward": -2.5, "entropy": 5.0, "reward_variance": 0.0},
                {"max_reward": -0.5, "entropy": 1.0, "reward_variance": 7.0},
                {"max_reward": -0.5, "entropy": 1.0, "reward_variance": 0.0},
            ]
        )
    )
    out = tmp_path / "plan.json"
    assert run_cli("rollout-plan", "--pilot-stats", pilots, "--budget", 18, "--out", out) == EXIT_OK
    plan = json.loads(out.read_text())
    assert plan["allocations"] == [8, 4, 0]
    assert plan["pilot_size"] == 2


def test_repair_valid_file_is_identity(tmp_path):
    queries = tmp_path / "queries.sql"
    queries.write_text("SELECT name FROM customers;\nSELECT count(*) FROM stores;\n")
    out = tmp_path / "repaired.sql"
    assert run_cli("repair", "--queries", queries, "--simulate", "--out", out) == EXIT_OK
    repaired = [s.strip() for s in out.read_text().split(";") if s.strip()]
    assert repaired == ["SELECT name FROM customers", "SELECT count(*) FROM stores"]


def test_stats_command_and_empty_corpus(tmp_path, seeds_file, gate_off_config):
    corpus = tmp_path / "corpus.jsonl"
    run_cli(
        "generate", "--seeds", seeds_file, "--simulate", "--config", gate_off_config,
        "--iterations", 30, "--seed", 3, "--out", corpus,
    )
    out = tmp_path / "stats.json"
    assert run_cli("stats", "--corpus", corpus, "--out", out) == EXIT_OK
    assert json.loads(out.read_text())["record_count"] > 0

    empty = tmp_path / "empty.jsonl"
    empty.write_text('{"version": 1, "kind": "slow-query-corpus"}\n')
    out2 = tmp_path / "stats2.json"
    assert run_cli("stats", "--corpus", empty, "--out", out2) == EXIT_OK
    doc = json.loads(out2.read_text())
    assert doc["record_count"] == 0
    assert doc["mean_token_count"] is None


def test_export_sft_command(tmp_path, seeds_file, gate_off_config):
    corpus = tmp_path / "corpus.jsonl"
    run_cli(
        "generate", "--seeds", seeds_file, "--simulate", "--config", gate_off_config,
        "--iterations", 30, "--seed", 3, "--out", corpus,
    )
    out = tmp_path / "sft.jsonl"
    assert run_cli("export-sft", "--corpus", corpus, "--simulate", "--out", out) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines
    first = json.loads(lines[0])
    assert first["slow_sql"] and first["schema"] and first["plan"]


def test_bench_command(tmp_path):
    workload = tmp_path / "workload.sql"
    workload.write_text(fixture_path("workload.sql").read_text())
    out = tmp_path / "report.json"
    code = run_cli(
        "bench", "--workload", workload, "--simulate", "--out", out, "--timeout-seconds", 120,
    )
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["median"] <= doc["p75"] <= doc["p95"]
    assert len(doc["entries"]) == 20


def test_strategies_command(tmp_path):
    out = tmp_path / "strategies.json"
    assert run_cli("strategies", "--out", out) == EXIT_OK
    doc = json.loads(out.read_text())
    assert {s["id"] for s in doc} >= {"equi_join_to_exists", "self_wrap"}
