/** Knobs of the reward/advantage kernel. All fields optional: the service
 * fills in its documented defaults for anything omitted. */
export interface RewardConfig {
  rho_fmt?: number;
  rho_exe?: number;
  rho_sem?: number;
  eta?: number;
  lambda_mix?: number;
  baseline_b?: number;
  scale_s?: number;
  epsilon?: number;
  kl_coeff?: number;
  clip_ratio?: number | null;
}

/** Execution verdict for one sampled rewrite candidate. */
export interface CandidateOutcome {
  extraction_ok: boolean;
  exec_ok?: boolean;
  equivalent?: boolean;
  latency?: number | null;
  baseline_latency?: number | null;
}

export interface ScalePair {
  t_new: number;
  t_old: number;
}

/** Per-prompt pilot-phase statistics. */
export interface PilotStats {
  max_reward: number;
  entropy: number;
  reward_variance: number;
}

export interface AggregationWeights {
  w_fail?: number;
  w_entropy?: number;
  w_var?: number;
}

export interface RolloutPlan {
  pilot_size: number;
  total_budget: number;
  weights: number[];
  allocations: number[];
}
