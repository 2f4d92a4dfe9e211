"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class StrategyModel(BaseModel):
    id: str
    description: str
    prompt_template: str


class StrategiesResponse(BaseModel):
    strategies: list[StrategyModel]


class ErrorBody(BaseModel):
    code: str
    message: str


# -- sql ------------------------------------------------------------------------


class ParseRequest(BaseModel):
    sql: str
    dialect: str = "postgres"


class ProfileModel(BaseModel):
    token_count: int
    predicate_count: int
    subquery_count: int
    join_count: int
    nesting_depth: int


class ParseResponse(BaseModel):
    canonical_sql: str
    node_count: int
    profile: ProfileModel


class DistanceRequest(BaseModel):
    sql_a: str
    sql_b: str
    dialect: str = "postgres"


class DistanceResponse(BaseModel):
    edit_distance: int
    normalized_distance: float


# -- kernel ---------------------------------------------------------------------------


class RewardConfigModel(BaseModel):
    rho_fmt: float = -3.0
    rho_exe: float = -2.5
    rho_sem: float = -1.5
    eta: float = 3.0
    lambda_mix: float = 0.5
    baseline_b: float = 0.0
    scale_s: float = 3.0
    epsilon: float = 1e-8
    kl_coeff: float = 1e-3
    clip_ratio: float | None = None


class OutcomeModel(BaseModel):
    extraction_ok: bool
    exec_ok: bool = False
    equivalent: bool = False
    latency: float | None = None
    baseline_latency: float | None = None


class HierarchicalRewardRequest(BaseModel):
    outcomes: list[OutcomeModel]
    config: RewardConfigModel = Field(default_factory=RewardConfigModel)


class HierarchicalRewardResponse(BaseModel):
    rewards: list[float]


class ScalePair(BaseModel):
    t_new: float
    t_old: float


class AsymmetricScaleRequest(BaseModel):
    pairs: list[ScalePair]
    eta: float = 3.0


class AsymmetricScaleResponse(BaseModel):
    values: list[float]


class AnchoredAdvantageRequest(BaseModel):
    rewards: list[float]
    config: RewardConfigModel = Field(default_factory=RewardConfigModel)


class AnchoredAdvantageResponse(BaseModel):
    advantages: list[float]


class PilotStatsModel(BaseModel):
    max_reward: float
    entropy: float
    reward_variance: float


class RolloutWeightsRequest(BaseModel):
    pilots: list[PilotStatsModel]
    config: RewardConfigModel = Field(default_factory=RewardConfigModel)
    w_fail: float = 1.0 / 3.0
    w_entropy: float = 1.0 / 3.0
    w_var: float = 1.0 / 3.0


class RolloutWeightsResponse(BaseModel):
    weights: list[float]


class AllocateBudgetRequest(BaseModel):
    weights: list[float]
    total_budget: int
    pilot_size: int = 2


class AllocateBudgetResponse(BaseModel):
    pilot_size: int
    total_budget: int
    weights: list[float]
    allocations: list[int]


class PolicyObjectiveRequest(BaseModel):
    token_logratio: list[float]
    advantage: float
    token_kl: list[float]
    config: RewardConfigModel = Field(default_factory=RewardConfigModel)


class PolicyObjectiveResponse(BaseModel):
    loss: float


# -- pipeline -----------------------------------------------------------------------------


class ConfigSections(BaseModel):
    search: dict = Field(default_factory=dict)
    reward: dict = Field(default_factory=dict)
    executor: dict = Field(default_factory=dict)
    seed_gate: dict = Field(default_factory=dict)
    min_slowdown_ratio: float = 2.0


class GenerateRequest(BaseModel):
    seeds: list[str]
    simulate: bool = True
    dsn: str | None = None
    config: ConfigSections = Field(default_factory=ConfigSections)
    checkpoints: dict[str, dict] = Field(default_factory=dict)


class RecordModel(BaseModel):
    seed_sql: str
    slow_sql: str
    seed_latency: float
    slow_latency: float
    slowdown_ratio: float
    strategy_lineage: list[str]
    schema_id: str
    audit_verdict: str


class SeedReportModel(BaseModel):
    seed_sql: str
    accepted: bool
    reason: str
    detail: str
    t0: float | None
    iterations: int
    nodes: int
    harvested: int
    kept: int
    dropped: int


class StatsModel(BaseModel):
    record_count: int
    mean_token_count: float | None
    mean_predicate_count: float | None
    mean_subquery_count: float | None


class GenerateResponse(BaseModel):
    records: list[RecordModel]
    seed_reports: list[SeedReportModel]
    stats: StatsModel
    checkpoints: dict[str, dict]


class BenchRequest(BaseModel):
    queries: list[str]
    rewrites: list[str] | None = None
    simulate: bool = True
    dsn: str | None = None
    executor: dict = Field(default_factory=dict)


class BenchEntryModel(BaseModel):
    sql: str
    status: str
    latency_seconds: float
    rewrite_sql: str | None
    rewrite_status: str | None
    rewrite_latency_seconds: float | None
    equivalent: bool | None


class BenchResponse(BaseModel):
    mean: float
    median: float
    p75: float
    p95: float
    equivalence_rate: float
    timeout_count: int
    entries: list[BenchEntryModel]


class RepairPair(BaseModel):
    original: str | None = None
    candidate: str


class RepairRequest(BaseModel):
    pairs: list[RepairPair]
    simulate: bool = True
    dsn: str | None = None
    max_rounds: int = 2
    mock_model_responses: list[str] | None = None


class RepairEntryModel(BaseModel):
    input_sql: str
    output_sql: str
    status: str
    rounds_used: int
    verifies: bool
    error: str = ""


class RepairResponse(BaseModel):
    results: list[RepairEntryModel]


class CorpusStatsRequest(BaseModel):
    records: list[RecordModel]


class ExportSftRequest(BaseModel):
    records: list[RecordModel]
    schema_ddl: str | None = None
    with_plans: bool = True
    simulate: bool = True
    dsn: str | None = None


class ExportSftResponse(BaseModel):
    lines: list[str]
