import { errorFromResponse } from "./errors.js";
import type {
  AggregationWeights,
  CandidateOutcome,
  PilotStats,
  RewardConfig,
  RolloutPlan,
  ScalePair,
} from "./types.js";

type FetchLike = typeof fetch;

/**
 * Client for the six policy-alignment kernel operations served over HTTP.
 * Numbers round-trip as IEEE-754 doubles through JSON, so results are
 * bit-identical to the native kernel. Inputs are never mutated.
 */
export class KernelClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  /** Strict-hierarchy rewards for a batch of candidate execution outcomes. */
  async hierarchicalReward(
    outcomes: readonly CandidateOutcome[],
    config?: RewardConfig,
  ): Promise<number[]> {
    const body = await this.post<{ rewards: number[] }>("/kernel/hierarchical-reward", {
      outcomes,
      ...(config ? { config } : {}),
    });
    return body.rewards;
  }

  /** Asymmetric latency scaling for (t_new, t_old) pairs. */
  async asymmetricScale(pairs: readonly ScalePair[], eta = 3.0): Promise<number[]> {
    const body = await this.post<{ values: number[] }>("/kernel/asymmetric-scale", {
      pairs,
      eta,
    });
    return body.values;
  }

  /** Anchored group advantages (zero-mean) for one reward group. */
  async anchoredAdvantage(
    rewards: readonly number[],
    config?: RewardConfig,
  ): Promise<number[]> {
    const body = await this.post<{ advantages: number[] }>("/kernel/anchored-advantage", {
      rewards,
      ...(config ? { config } : {}),
    });
    return body.advantages;
  }

  /** Pilot-driven allocation weights per prompt. */
  async rolloutWeights(
    pilots: readonly PilotStats[],
    config?: RewardConfig,
    aggregation?: AggregationWeights,
  ): Promise<number[]> {
    const body = await this.post<{ weights: number[] }>("/kernel/rollout-weights", {
      pilots,
      ...(config ? { config } : {}),
      ...(aggregation ?? {}),
    });
    return body.weights;
  }

  /** Largest-remainder apportionment of the post-pilot rollout budget. */
  async allocateBudget(
    weights: readonly number[],
    totalBudget: number,
    pilotSize = 2,
  ): Promise<RolloutPlan> {
    return this.post<RolloutPlan>("/kernel/allocate-budget", {
      weights,
      total_budget: totalBudget,
      pilot_size: pilotSize,
    });
  }

  /** Per-sequence policy loss from token log-ratios and KL values. */
  async policyObjectiveTerms(
    tokenLogratio: readonly number[],
    advantage: number,
    tokenKl: readonly number[],
    config?: RewardConfig,
  ): Promise<number> {
    const body = await this.post<{ loss: number }>("/kernel/policy-objective", {
      token_logratio: tokenLogratio,
      advantage,
      token_kl: tokenKl,
      ...(config ? { config } : {}),
    });
    return body.loss;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} ${response.statusText}`;
      try {
        const doc = (await response.json()) as { detail?: { code?: string; message?: string } };
        if (doc.detail && typeof doc.detail === "object") {
          code = doc.detail.code ?? code;
          message = doc.detail.message ?? message;
        }
      } catch {
        // non-JSON error body: keep the HTTP status text
      }
      throw errorFromResponse(code, message, response.status);
    }
    return (await response.json()) as T;
  }
}
