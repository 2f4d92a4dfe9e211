#!/usr/bin/env python3
"""Generate parity fixtures: randomized inputs plus native kernel outputs.

The vitest suite replays these against a live service instance and asserts
elementwise agreement within 1e-12. Usage:

    python3 scripts/make_parity_fixtures.py .parity/parity.json
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

from slowforge.kernel import (
    CandidateOutcome,
    PilotStats,
    RewardConfig,
    allocate_budget,
    anchored_advantage,
    asymmetric_scale,
    hierarchical_reward,
    policy_objective_terms,
    rollout_weights,
)

COUNT = 1000
BATCH = 50


def random_config(rng: random.Random) -> dict:
    rho_sem = -rng.uniform(0.5, 2.0)
    rho_exe = rho_sem - rng.uniform(0.1, 2.0)
    rho_fmt = rho_exe - rng.uniform(0.1, 2.0)
    return {
        "rho_fmt": rho_fmt,
        "rho_exe": rho_exe,
        "rho_sem": rho_sem,
        "eta": rng.uniform(1.5, 4.0),
        "lambda_mix": rng.random(),
        "baseline_b": rng.uniform(-1.0, 1.0),
        "scale_s": rng.uniform(1.0, 5.0),
        "epsilon": 1e-8,
        "kl_coeff": rng.uniform(0.0, 0.1),
        "clip_ratio": None,
    }


def random_outcome(rng: random.Random) -> dict:
    branch = rng.randrange(4)
    if branch == 0:
        return {"extraction_ok": False}
    if branch == 1:
        return {"extraction_ok": True, "exec_ok": False}
    if branch == 2:
        return {"extraction_ok": True, "exec_ok": True, "equivalent": False}
    return {
        "extraction_ok": True,
        "exec_ok": True,
        "equivalent": True,
        "latency": rng.uniform(0.01, 50.0),
        "baseline_latency": rng.uniform(0.01, 50.0),
    }


def main(out_path: str) -> None:
    rng = random.Random(620_311)
    fixtures: dict = {}

    batches = []
    for _ in range(COUNT // BATCH):
        config = random_config(rng)
        cfg = RewardConfig(**config)
        outcomes = [random_outcome(rng) for _ in range(BATCH)]
        expected = [hierarchical_reward(CandidateOutcome(**o), cfg) for o in outcomes]
        batches.append({"outcomes": outcomes, "config": config, "expected": expected})
    fixtures["hierarchical_reward"] = batches

    batches = []
    for _ in range(COUNT // BATCH):
        eta = rng.uniform(1.5, 4.0)
        pairs = [
            {"t_new": rng.uniform(1e-3, 40.0), "t_old": rng.uniform(1e-3, 40.0)}
            for _ in range(BATCH)
        ]
        expected = [asymmetric_scale(p["t_new"], p["t_old"], eta) for p in pairs]
        batches.append({"pairs": pairs, "eta": eta, "expected": expected})
    fixtures["asymmetric_scale"] = batches

    cases = []
    for index in range(COUNT):
        if index == 0:
            # The worked suppression example, pinned.
            config = random_config(rng)
            config.update({"lambda_mix": 0.5, "baseline_b": 0.0, "scale_s": 3.0})
            rewards = [-3.0, -3.0, -3.0, -0.5]
        else:
            config = random_config(rng)
            if index % 10 == 0:
                config["lambda_mix"] = 0.0  # pure z-score reduction cases
            group = rng.randint(2, 16)
            rewards = [rng.uniform(-3.0, 3.0) for _ in range(group)]
        expected = [float(x) for x in anchored_advantage(rewards, RewardConfig(**config))]
        cases.append({"rewards": rewards, "config": config, "expected": expected})
    fixtures["anchored_advantage"] = cases

    cases = []
    for _ in range(COUNT):
        config = random_config(rng)
        pilots = [
            {
                "max_reward": rng.uniform(-4.0, 3.0),
                "entropy": rng.uniform(0.0, 5.0),
                "reward_variance": rng.uniform(0.0, 4.0),
            }
            for _ in range(rng.randint(1, 8))
        ]
        w = [rng.random() for _ in range(3)]
        expected = [
            float(x)
            for x in rollout_weights(
                [PilotStats(**p) for p in pilots], RewardConfig(**config), *w
            )
        ]
        cases.append(
            {"pilots": pilots, "config": config, "w_fail": w[0], "w_entropy": w[1], "w_var": w[2], "expected": expected}
        )
    fixtures["rollout_weights"] = cases

    cases = []
    for _ in range(COUNT):
        prompts = rng.randint(1, 12)
        weights = [rng.uniform(0.0, 5.0) if rng.random() > 0.1 else 0.0 for _ in range(prompts)]
        pilot = rng.randint(0, 4)
        total = prompts * pilot + rng.randint(0, 96)
        plan = allocate_budget(weights, total, pilot)
        cases.append(
            {
                "weights": weights,
                "total_budget": total,
                "pilot_size": pilot,
                "expected": list(plan.allocations),
            }
        )
    fixtures["allocate_budget"] = cases

    cases = []
    for _ in range(COUNT):
        config = random_config(rng)
        tokens = rng.randint(1, 12)
        logratio = [rng.uniform(-1.5, 1.5) for _ in range(tokens)]
        kl = [rng.uniform(0.0, 2.0) for _ in range(tokens)]
        advantage = rng.uniform(-2.5, 2.5)
        if rng.random() < 0.25:
            config["clip_ratio"] = rng.uniform(0.1, 0.4)
        expected = policy_objective_terms(logratio, advantage, kl, RewardConfig(**config))
        cases.append(
            {
                "token_logratio": logratio,
                "advantage": advantage,
                "token_kl": kl,
                "config": config,
                "expected": expected,
            }
        )
    fixtures["policy_objective"] = cases

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixtures))
    sizes = {k: len(v) for k, v in fixtures.items()}
    print(f"wrote {out} ({sizes})")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".parity/parity.json")
