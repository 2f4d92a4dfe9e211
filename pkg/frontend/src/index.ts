export { KernelClient } from "./client.js";
export {
  GroupTooSmallError,
  InsufficientBudgetError,
  KernelServiceError,
  NumericalKernelError,
} from "./errors.js";
export type {
  AggregationWeights,
  CandidateOutcome,
  PilotStats,
  RewardConfig,
  RolloutPlan,
  ScalePair,
} from "./types.js";
