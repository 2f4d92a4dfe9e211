"""Pure numeric kernel for group-relative policy alignment on SQL rewrites.

Everything here is a deterministic function over plain numbers: the
hierarchical execution reward with its asymmetric latency scaling, the
anchored group advantage (relative z-score fused with an absolute baseline
term, then re-centered to zero mean), pilot-driven rollout budget weighting
with largest-remainder allocation, and the per-token policy objective. No
model ever runs here; callers supply log-probabilities and KL values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class GroupTooSmall(ValueError):
    pass


class InsufficientBudget(ValueError):
    pass


class NumericalError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RewardConfig:
    rho_fmt: float = -3.0
    rho_exe: float = -2.5
    rho_sem: float = -1.5
    eta: float = 3.0
    lambda_mix: float = 0.5
    baseline_b: float = 0.0
    scale_s: float = 3.0
    epsilon: float = 1e-8
    kl_coeff: float = 1e-3
    clip_ratio: float | None = None  # optional PPO-style clipping, off by default

    def __post_init__(self) -> None:
        if not (self.rho_fmt < self.rho_exe < self.rho_sem < 0):
            raise ValueError("failure penalties must satisfy rho_fmt < rho_exe < rho_sem < 0")
        if self.eta <= 1:
            raise ValueError("eta must exceed 1")
        if self.scale_s <= 0 or self.epsilon <= 0:
            raise ValueError("scale_s and epsilon must be positive")
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ValueError("lambda_mix must lie in [0, 1]")

    def to_json(self) -> dict:
        return {
            "rho_fmt": self.rho_fmt,
            "rho_exe": self.rho_exe,
            "rho_sem": self.rho_sem,
            "eta": self.eta,
            "lambda_mix": self.lambda_mix,
            "baseline_b": self.baseline_b,
            "scale_s": self.scale_s,
            "epsilon": self.epsilon,
            "kl_coeff": self.kl_coeff,
            "clip_ratio": self.clip_ratio,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RewardConfig":
        return cls(**doc)


@dataclass(frozen=True, slots=True)
class CandidateOutcome:
    """Execution verdict for one sampled rewrite candidate."""

    extraction_ok: bool
    exec_ok: bool = False
    equivalent: bool = False
    latency: float | None = None
    baseline_latency: float | None = None

    def __post_init__(self) -> None:
        if not self.exec_ok and (self.equivalent or self.latency is not None):
            raise ValueError("equivalence and latency are defined only when exec_ok")
        if self.exec_ok and self.equivalent:
            if self.latency is None or self.baseline_latency is None:
                raise ValueError("equivalent outcomes need latency and baseline_latency")


@dataclass(frozen=True, slots=True)
class PilotStats:
    """Per-prompt statistics gathered during the pilot phase."""

    max_reward: float
    entropy: float
    reward_variance: float


@dataclass(frozen=True, slots=True)
class RolloutPlan:
    pilot_size: int
    total_budget: int
    weights: tuple[float, ...]
    allocations: tuple[int, ...]

    def __post_init__(self) -> None:
        prompts = len(self.weights)
        if len(self.allocations) != prompts:
            raise ValueError("allocations must align with weights")
        if any(a < 0 for a in self.allocations) or any(w < 0 for w in self.weights):
            raise ValueError("weights and allocations must be nonnegative")
        if sum(self.allocations) + prompts * self.pilot_size != self.total_budget:
            raise ValueError("allocations plus pilot budget must equal the total budget")

    def to_json(self) -> dict:
        return {
            "pilot_size": self.pilot_size,
            "total_budget": self.total_budget,
            "weights": list(self.weights),
            "allocations": list(self.allocations),
        }


def asymmetric_scale(t_new: float, t_old: float, eta: float = 3.0) -> float:
    """Latency reward: tanh of the log speedup, amplified by eta when the
    rewrite is faster than the baseline. Range (-1, eta]."""
    if t_new <= 0 or t_old <= 0:
        raise ValueError("durations must be positive")
    value = math.tanh(math.log(t_old / t_new))
    return eta * value if t_new < t_old else value


def hierarchical_reward(outcome: CandidateOutcome, cfg: RewardConfig | None = None) -> float:
    """Strict validity hierarchy: unextractable output, execution failure, and
    non-equivalence earn increasingly mild penalties; verified rewrites earn
    the asymmetric latency reward."""
    cfg = cfg or RewardConfig()
    if not outcome.extraction_ok:
        return cfg.rho_fmt
    if not outcome.exec_ok:
        return cfg.rho_exe
    if not outcome.equivalent:
        return cfg.rho_sem
    assert outcome.latency is not None and outcome.baseline_latency is not None
    return asymmetric_scale(outcome.latency, outcome.baseline_latency, cfg.eta)


def anchored_advantage(rewards: Sequence[float], cfg: RewardConfig | None = None) -> np.ndarray:
    """Fuse the within-group z-score with an absolute performance anchor and
    re-center to zero mean.

    The relative term uses the population standard deviation; the absolute
    term (r - b)/S is weighted by sqrt(G) to match the z-score's magnitude.
    Centering keeps the zero-sum property needed for stable policy updates.
    """
    cfg = cfg or RewardConfig()
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError("rewards must be a flat vector")
    group = r.size
    if group < 2:
        raise GroupTooSmall(f"need at least 2 rewards, got {group}")
    if not np.all(np.isfinite(r)):
        raise NumericalError("rewards contain non-finite values")
    mu = r.mean()
    sigma = r.std()  # population form
    relative = (r - mu) / (sigma + cfg.epsilon)
    absolute = (r - cfg.baseline_b) / cfg.scale_s * math.sqrt(group)
    anchor = (1.0 - cfg.lambda_mix) * relative + cfg.lambda_mix * absolute
    return anchor - anchor.mean()


def rollout_weights(
    pilots: Sequence[PilotStats],
    cfg: RewardConfig | None = None,
    w_fail: float = 1.0 / 3.0,
    w_entropy: float = 1.0 / 3.0,
    w_var: float = 1.0 / 3.0,
) -> np.ndarray:
    """Allocation weight per prompt: a failure indicator (no pilot completion
    beat the non-equivalence penalty), plus batch-normalized policy entropy
    and reward variance. A batch with zero spread normalizes to zero."""
    cfg = cfg or RewardConfig()
    if not pilots:
        return np.zeros(0)
    entropy = np.asarray([p.entropy for p in pilots], dtype=np.float64)
    variance = np.asarray([p.reward_variance for p in pilots], dtype=np.float64)
    failed = np.asarray(
        [1.0 if p.max_reward < cfg.rho_sem else 0.0 for p in pilots], dtype=np.float64
    )
    return w_fail * failed + w_entropy * _minmax(entropy) + w_var * _minmax(variance)


def _minmax(values: np.ndarray) -> np.ndarray:
    spread = values.max() - values.min()
    if spread <= 0:
        return np.zeros_like(values)
    return (values - values.min()) / spread


def allocate_budget(
    weights: Sequence[float], total_budget: int, pilot_size: int = 2
) -> RolloutPlan:
    """Largest-remainder proportional apportionment of the post-pilot budget.
    All-zero weights fall back to a uniform split."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    prompts = w.size
    pilot_total = prompts * pilot_size
    if total_budget < pilot_total:
        raise InsufficientBudget(
            f"budget {total_budget} cannot cover {prompts} pilots of size {pilot_size}"
        )
    remaining = total_budget - pilot_total
    if w.sum() <= 0:
        w = np.ones(prompts)
    quotas = w / w.sum() * remaining
    floors = np.floor(quotas).astype(int)
    leftover = remaining - int(floors.sum())
    remainders = quotas - floors
    order = np.argsort(-remainders, kind="stable")  # equal remainders: lowest index
    for i in order[:leftover]:
        floors[i] += 1
    return RolloutPlan(
        pilot_size=pilot_size,
        total_budget=total_budget,
        weights=tuple(float(x) for x in weights),
        allocations=tuple(int(x) for x in floors),
    )


def policy_objective_terms(
    token_logratio: Sequence[float],
    advantage: float,
    token_kl: Sequence[float],
    cfg: RewardConfig | None = None,
) -> float:
    """Per-sequence loss: -mean_t[ratio_t * advantage - kl_coeff * kl_t],
    with ratio_t = exp(logratio_t). Optional ratio clipping engages only when
    cfg.clip_ratio is set."""
    cfg = cfg or RewardConfig()
    lr = np.asarray(token_logratio, dtype=np.float64)
    kl = np.asarray(token_kl, dtype=np.float64)
    if lr.size == 0 or lr.shape != kl.shape:
        raise ValueError("token sequences must be non-empty and aligned")
    if not (np.all(np.isfinite(lr)) and np.all(np.isfinite(kl)) and math.isfinite(advantage)):
        raise NumericalError("non-finite inputs")
    ratio = np.exp(lr)
    if cfg.clip_ratio is not None:
        clipped = np.clip(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio)
        surrogate = np.minimum(ratio * advantage, clipped * advantage)
    else:
        surrogate = ratio * advantage
    loss = -float(np.mean(surrogate - cfg.kl_coeff * kl))
    if not math.isfinite(loss):
        raise NumericalError("loss overflowed")
    return loss
