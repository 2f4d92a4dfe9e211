import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { GroupTooSmallError, InsufficientBudgetError, KernelClient } from "../src/index.js";

const TOLERANCE = 1e-12;
const CONCURRENCY = 24;

const fixtures = JSON.parse(readFileSync(".parity/parity.json", "utf8"));
const { baseUrl } = JSON.parse(readFileSync(".parity/service.json", "utf8"));
const client = new KernelClient(baseUrl);

function expectClose(got: number[], want: number[], label: string): void {
  expect(got.length, label).toBe(want.length);
  for (let i = 0; i < got.length; i++) {
    expect(Math.abs(got[i] - want[i]), `${label}[${i}]`).toBeLessThanOrEqual(TOLERANCE);
  }
}

async function inChunks<T>(items: T[], run: (item: T) => Promise<void>): Promise<void> {
  for (let start = 0; start < items.length; start += CONCURRENCY) {
    await Promise.all(items.slice(start, start + CONCURRENCY).map(run));
  }
}

describe("kernel binding parity (1000 randomized inputs per operation)", () => {
  it("hierarchical reward matches native outputs", async () => {
    await inChunks(fixtures.hierarchical_reward, async (batch: any) => {
      const rewards = await client.hierarchicalReward(batch.outcomes, batch.config);
      expectClose(rewards, batch.expected, "hierarchical_reward");
    });
  });

  it("asymmetric scale matches native outputs", async () => {
    await inChunks(fixtures.asymmetric_scale, async (batch: any) => {
      const values = await client.asymmetricScale(batch.pairs, batch.eta);
      expectClose(values, batch.expected, "asymmetric_scale");
    });
  });

  it("anchored advantage matches native outputs", async () => {
    await inChunks(fixtures.anchored_advantage, async (c: any) => {
      const advantages = await client.anchoredAdvantage(c.rewards, c.config);
      expectClose(advantages, c.expected, "anchored_advantage");
    });
  });

  it("rollout weights match native outputs", async () => {
    await inChunks(fixtures.rollout_weights, async (c: any) => {
      const weights = await client.rolloutWeights(c.pilots, c.config, {
        w_fail: c.w_fail,
        w_entropy: c.w_entropy,
        w_var: c.w_var,
      });
      expectClose(weights, c.expected, "rollout_weights");
    });
  });

  it("budget allocation matches native outputs exactly", async () => {
    await inChunks(fixtures.allocate_budget, async (c: any) => {
      const plan = await client.allocateBudget(c.weights, c.total_budget, c.pilot_size);
      expect(plan.allocations).toEqual(c.expected);
      const allocated = plan.allocations.reduce((a: number, b: number) => a + b, 0);
      expect(allocated + c.weights.length * c.pilot_size).toBe(c.total_budget);
    });
  });

  it("policy objective matches native outputs", async () => {
    await inChunks(fixtures.policy_objective, async (c: any) => {
      const loss = await client.policyObjectiveTerms(
        c.token_logratio,
        c.advantage,
        c.token_kl,
        c.config,
      );
      expect(Math.abs(loss - c.expected)).toBeLessThanOrEqual(TOLERANCE);
    });
  });
});

describe("error propagation", () => {
  it("maps group_too_small to GroupTooSmallError with the native message", async () => {
    const failure = client.anchoredAdvantage([1.0]);
    await expect(failure).rejects.toBeInstanceOf(GroupTooSmallError);
    await failure.catch((err: GroupTooSmallError) => {
      expect(err.code).toBe("group_too_small");
      expect(err.message).toContain("at least 2");
      expect(err.status).toBe(400);
    });
  });

  it("maps insufficient_budget to InsufficientBudgetError", async () => {
    await expect(client.allocateBudget([1.0, 1.0], 3, 2)).rejects.toBeInstanceOf(
      InsufficientBudgetError,
    );
  });

  it("does not mutate input buffers", async () => {
    const rewards = [-3.0, -3.0, -3.0, -0.5];
    const snapshot = [...rewards];
    await client.anchoredAdvantage(rewards);
    expect(rewards).toEqual(snapshot);
  });
});
