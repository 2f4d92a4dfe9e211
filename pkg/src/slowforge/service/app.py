"""HTTP service wrapping the core package.

Long-running deployments hold backend connections and serve the reward,
advantage, budgeting, repair, and generation operations to training loops and
operators; the CLI is a thin client of these endpoints (in-process by
default). Domain failures map to 400 responses carrying a stable error code."""

from __future__ import annotations

import dataclasses
import os
from contextlib import contextmanager

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import run_bench
from ..config import ConfigError, build_config
from ..corpus import CorpusRecord, corpus_stats, export_sft
from ..degrade import builtin_library
from ..executor import ExecutorConfig, TransportError
from ..kernel import (
    CandidateOutcome,
    GroupTooSmall,
    InsufficientBudget,
    NumericalError,
    PilotStats,
    RewardConfig,
    allocate_budget,
    anchored_advantage,
    asymmetric_scale,
    hierarchical_reward,
    policy_objective_terms,
    rollout_weights,
)
from ..mutate import MockModelClient, ModelClient
from ..pipeline import BackendUnavailable, generate_corpus, make_backend
from ..repair import repair_loop, verify
from ..sqltree import Dialect, ParseError, complexity_profile, parse, render, tree_edit_distance
from ..sqltree import structural_distance
from . import models as m


def _fail(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _dialect(name: str) -> Dialect:
    try:
        return Dialect(name)
    except ValueError:
        raise _fail(400, "bad_dialect", f"unknown dialect {name!r}") from None


def _reward_config(model: m.RewardConfigModel) -> RewardConfig:
    try:
        return RewardConfig(**model.model_dump())
    except ValueError as exc:
        raise _fail(400, "bad_config", str(exc)) from None


@contextmanager
def _backend(simulate: bool, dsn: str | None):
    try:
        backend = make_backend(simulate, dsn)
    except BackendUnavailable as exc:
        raise _fail(400, "backend_unavailable", str(exc)) from None
    try:
        yield backend
    except TransportError as exc:
        raise _fail(502, "backend_transport", str(exc)) from None
    finally:
        backend.close()


def create_app() -> FastAPI:
    app = FastAPI(title="slowforge", version=__version__)

    @app.get("/health", response_model=m.HealthResponse)
    def health() -> m.HealthResponse:
        return m.HealthResponse(status="ok", version=__version__)

    @app.get("/strategies", response_model=m.StrategiesResponse)
    def strategies() -> m.StrategiesResponse:
        return m.StrategiesResponse(
            strategies=[
                m.StrategyModel(
                    id=s.id, description=s.description, prompt_template=s.prompt_template
                )
                for s in builtin_library()
            ]
        )

    # -- sql ----------------------------------------------------------------

    @app.post("/sql/parse", response_model=m.ParseResponse)
    def sql_parse(req: m.ParseRequest) -> m.ParseResponse:
        try:
            tree = parse(req.sql, _dialect(req.dialect))
        except ParseError as exc:
            raise _fail(400, "parse_error", str(exc)) from None
        profile = complexity_profile(tree)
        return m.ParseResponse(
            canonical_sql=render(tree),
            node_count=tree.node_count(),
            profile=m.ProfileModel(**dataclasses.asdict(profile)),
        )

    @app.post("/sql/distance", response_model=m.DistanceResponse)
    def sql_distance(req: m.DistanceRequest) -> m.DistanceResponse:
        d = _dialect(req.dialect)
        try:
            a, b = parse(req.sql_a, d), parse(req.sql_b, d)
        except ParseError as exc:
            raise _fail(400, "parse_error", str(exc)) from None
        return m.DistanceResponse(
            edit_distance=tree_edit_distance(a, b),
            normalized_distance=structural_distance(a, b),
        )

    # -- kernel ----------------------------------------------------------------

    @app.post("/kernel/hierarchical-reward", response_model=m.HierarchicalRewardResponse)
    def kernel_reward(req: m.HierarchicalRewardRequest) -> m.HierarchicalRewardResponse:
        cfg = _reward_config(req.config)
        try:
            outcomes = [CandidateOutcome(**o.model_dump()) for o in req.outcomes]
            rewards = [hierarchical_reward(o, cfg) for o in outcomes]
        except ValueError as exc:
            raise _fail(400, "bad_outcome", str(exc)) from None
        return m.HierarchicalRewardResponse(rewards=rewards)

    @app.post("/kernel/asymmetric-scale", response_model=m.AsymmetricScaleResponse)
    def kernel_scale(req: m.AsymmetricScaleRequest) -> m.AsymmetricScaleResponse:
        try:
            values = [asymmetric_scale(p.t_new, p.t_old, req.eta) for p in req.pairs]
        except ValueError as exc:
            raise _fail(400, "bad_duration", str(exc)) from None
        return m.AsymmetricScaleResponse(values=values)

    @app.post("/kernel/anchored-advantage", response_model=m.AnchoredAdvantageResponse)
    def kernel_advantage(req: m.AnchoredAdvantageRequest) -> m.AnchoredAdvantageResponse:
        cfg = _reward_config(req.config)
        try:
            advantages = anchored_advantage(req.rewards, cfg)
        except GroupTooSmall as exc:
            raise _fail(400, "group_too_small", str(exc)) from None
        except NumericalError as exc:
            raise _fail(400, "numerical_error", str(exc)) from None
        return m.AnchoredAdvantageResponse(advantages=[float(x) for x in advantages])

    @app.post("/kernel/rollout-weights", response_model=m.RolloutWeightsResponse)
    def kernel_weights(req: m.RolloutWeightsRequest) -> m.RolloutWeightsResponse:
        cfg = _reward_config(req.config)
        pilots = [PilotStats(**p.model_dump()) for p in req.pilots]
        weights = rollout_weights(pilots, cfg, req.w_fail, req.w_entropy, req.w_var)
        return m.RolloutWeightsResponse(weights=[float(x) for x in weights])

    @app.post("/kernel/allocate-budget", response_model=m.AllocateBudgetResponse)
    def kernel_allocate(req: m.AllocateBudgetRequest) -> m.AllocateBudgetResponse:
        try:
            plan = allocate_budget(req.weights, req.total_budget, req.pilot_size)
        except InsufficientBudget as exc:
            raise _fail(400, "insufficient_budget", str(exc)) from None
        except ValueError as exc:
            raise _fail(400, "bad_weights", str(exc)) from None
        return m.AllocateBudgetResponse(**plan.to_json())

    @app.post("/kernel/policy-objective", response_model=m.PolicyObjectiveResponse)
    def kernel_objective(req: m.PolicyObjectiveRequest) -> m.PolicyObjectiveResponse:
        cfg = _reward_config(req.config)
        try:
            loss = policy_objective_terms(req.token_logratio, req.advantage, req.token_kl, cfg)
        except NumericalError as exc:
            raise _fail(400, "numerical_error", str(exc)) from None
        except ValueError as exc:
            raise _fail(400, "bad_sequences", str(exc)) from None
        return m.PolicyObjectiveResponse(loss=loss)

    # -- pipeline ------------------------------------------------------------------

    @app.post("/generate", response_model=m.GenerateResponse)
    def generate(req: m.GenerateRequest) -> m.GenerateResponse:
        try:
            cfg = build_config(
                {
                    "": {"min_slowdown_ratio": req.config.min_slowdown_ratio},
                    "search": req.config.search,
                    "reward": req.config.reward,
                    "executor": req.config.executor,
                    "seed_gate": req.config.seed_gate,
                }
            )
        except ConfigError as exc:
            raise _fail(400, "bad_config", str(exc)) from None
        model_client = _model_client_from_env()
        with _backend(req.simulate, req.dsn) as backend:
            result = generate_corpus(
                req.seeds,
                backend,
                cfg,
                model_client=model_client,
                checkpoints=req.checkpoints,
            )
        assert result.stats is not None
        return m.GenerateResponse(
            records=[m.RecordModel(**r.to_json()) for r in result.records],
            seed_reports=[m.SeedReportModel(**r.to_json()) for r in result.seed_reports],
            stats=m.StatsModel(**result.stats.to_json()),
            checkpoints=result.checkpoints,
        )

    @app.post("/bench", response_model=m.BenchResponse)
    def bench(req: m.BenchRequest) -> m.BenchResponse:
        try:
            exec_cfg = ExecutorConfig(**req.executor)
        except (TypeError, ValueError) as exc:
            raise _fail(400, "bad_config", str(exc)) from None
        with _backend(req.simulate, req.dsn) as backend:
            try:
                report = run_bench(req.queries, backend, exec_cfg, req.rewrites)
            except ValueError as exc:
                raise _fail(400, "bad_workload", str(exc)) from None
        doc = report.to_json()
        return m.BenchResponse(
            mean=doc["mean"],
            median=doc["median"],
            p75=doc["p75"],
            p95=doc["p95"],
            equivalence_rate=doc["equivalence_rate"],
            timeout_count=doc["timeout_count"],
            entries=[m.BenchEntryModel(**e) for e in doc["entries"]],
        )

    @app.post("/repair", response_model=m.RepairResponse)
    def repair(req: m.RepairRequest) -> m.RepairResponse:
        if req.mock_model_responses is not None:
            client = MockModelClient(req.mock_model_responses)
        else:
            client = _model_client_from_env()
        results: list[m.RepairEntryModel] = []
        with _backend(req.simulate, req.dsn) as backend:
            for pair in req.pairs:
                check = verify(pair.candidate, backend)
                if check.ok:
                    results.append(
                        m.RepairEntryModel(
                            input_sql=pair.candidate,
                            output_sql=pair.candidate,
                            status="accepted",
                            rounds_used=0,
                            verifies=True,
                        )
                    )
                    continue
                original = pair.original
                if original is not None and verify(original, backend).ok:
                    outcome = repair_loop(
                        original, pair.candidate, backend, client, req.max_rounds
                    )
                    results.append(
                        m.RepairEntryModel(
                            input_sql=pair.candidate,
                            output_sql=outcome.sql,
                            status=outcome.status,
                            rounds_used=outcome.rounds_used,
                            verifies=True,
                            error=outcome.last_error,
                        )
                    )
                    continue
                # No verified original to fall back to: best-effort repair.
                outcome = _repair_without_fallback(
                    pair.candidate, backend, client, req.max_rounds, check.message
                )
                results.append(outcome)
        return m.RepairResponse(results=results)

    @app.post("/corpus/stats", response_model=m.StatsModel)
    def stats(req: m.CorpusStatsRequest) -> m.StatsModel:
        try:
            records = [CorpusRecord.from_json(r.model_dump()) for r in req.records]
            summary = corpus_stats(records)
        except ParseError as exc:
            raise _fail(400, "parse_error", str(exc)) from None
        return m.StatsModel(**summary.to_json())

    @app.post("/corpus/export-sft", response_model=m.ExportSftResponse)
    def corpus_export(req: m.ExportSftRequest) -> m.ExportSftResponse:
        records = [CorpusRecord.from_json(r.model_dump()) for r in req.records]
        plans: dict[str, str] = {}
        schema_ddl = req.schema_ddl
        if req.with_plans or schema_ddl is None:
            with _backend(req.simulate, req.dsn) as backend:
                if schema_ddl is None:
                    schema_ddl = getattr(backend, "schema_ddl", "")
                if req.with_plans:
                    for r in records:
                        ok, text = backend.explain(r.slow_sql)
                        if ok:
                            plans[r.slow_sql] = text
        return m.ExportSftResponse(lines=export_sft(records, schema_ddl or "", plans))

    return app


def _repair_without_fallback(
    candidate: str, backend, client, max_rounds: int, first_error: str
) -> "m.RepairEntryModel":
    from ..mutate import ExtractionError, extract_sql
    from ..repair import _repair_template

    template = _repair_template()
    error = first_error
    current = candidate
    for round_number in range(1, max_rounds + 1):
        if client is None:
            break
        prompt = template.format(
            original_sql=candidate,
            candidate_sql=current,
            error_message=error,
            schema=getattr(backend, "schema_ddl", ""),
        )
        try:
            reply = client.complete(prompt)
            fixed = extract_sql(reply)
        except Exception:
            break
        check = verify(fixed, backend)
        if check.ok:
            return m.RepairEntryModel(
                input_sql=candidate,
                output_sql=fixed,
                status="repaired",
                rounds_used=round_number,
                verifies=True,
            )
        current, error = fixed, check.message
    return m.RepairEntryModel(
        input_sql=candidate,
        output_sql=candidate,
        status="fallback",
        rounds_used=max_rounds,
        verifies=False,
        error=error,
    )


def _model_client_from_env():
    if os.environ.get("MODEL_ENDPOINT"):
        return ModelClient()
    return None


app = create_app()
