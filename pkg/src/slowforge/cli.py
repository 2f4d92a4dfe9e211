"""Operator CLI: a thin client over the HTTP service.

Commands run against an in-process instance of the service by default; pass
--server to target a running deployment instead. File handling stays on the
client side, so the service itself remains stateless.

Exit codes: 0 success, 2 config/input error, 3 backend error, 4 zero yield.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from .config import ConfigError, parse_toml_subset
from .corpus import CorpusRecord, write_corpus
from .executor import load_workload

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_ZERO_YIELD = 4

_BACKEND_CODES = {"backend_unavailable", "backend_transport"}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge onto the ASGI app: each request runs the async
    transport to completion on a private event loop."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def roundtrip() -> httpx.Response:
            response = await self._asgi.handle_async_request(request)
            body = b"".join([chunk async for chunk in response.stream])
            return httpx.Response(
                status_code=response.status_code,
                headers=response.headers,
                content=body,
                extensions=response.extensions,
            )

        return asyncio.run(roundtrip())


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from .service import create_app

            self._client = httpx.Client(
                transport=_InProcessTransport(create_app()),
                base_url="http://slowforge.internal",
                timeout=600.0,
            )

    def get(self, path: str) -> dict:
        return self._handle(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._handle(self._client.post(path, json=payload))

    def _handle(self, response: httpx.Response) -> dict:
        if response.status_code == 200:
            return response.json()
        try:
            detail = response.json().get("detail", {})
        except Exception:
            detail = {}
        code = detail.get("code", "http_error") if isinstance(detail, dict) else "http_error"
        message = (
            detail.get("message", response.text) if isinstance(detail, dict) else str(detail)
        )
        exit_code = EXIT_BACKEND if code in _BACKEND_CODES else EXIT_CONFIG
        raise CliError(f"{code}: {message}", exit_code)

    def close(self) -> None:
        self._client.close()


def _stable_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {what}: {exc}", EXIT_CONFIG) from exc


def _read_json(path: str, what: str):
    try:
        return json.loads(_read_text(path, what))
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} is not valid JSON (line {exc.lineno}): {exc.msg}", EXIT_CONFIG)


def _write_output(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _config_sections(args) -> dict:
    sections: dict = {"search": {}, "reward": {}, "executor": {}, "seed_gate": {}}
    ratio = 2.0
    if getattr(args, "config", None):
        try:
            doc = parse_toml_subset(_read_text(args.config, "config file"))
        except ConfigError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from exc
        for key in sections:
            sections[key].update(doc.get(key, {}))
        top = doc.get("", {})
        ratio = top.get("min_slowdown_ratio", ratio)
    if getattr(args, "iterations", None) is not None:
        sections["search"]["iterations"] = args.iterations
    if getattr(args, "seed", None) is not None:
        sections["search"]["rng_seed"] = args.seed
    if getattr(args, "timeout_seconds", None) is not None:
        sections["executor"]["timeout_seconds"] = args.timeout_seconds
    sections["min_slowdown_ratio"] = ratio
    return sections


def _require_backend_choice(args) -> None:
    if not args.simulate and not args.dsn:
        env_dsn = os.environ.get("DATABASE_URL")
        if env_dsn:
            args.dsn = env_dsn
        else:
            raise CliError("choose --simulate, --dsn, or set DATABASE_URL", EXIT_CONFIG)


# -- commands -----------------------------------------------------------------------


def cmd_generate(args, client: ServiceClient) -> int:
    seeds = load_workload(_read_text(args.seeds, "seeds file"))
    if not seeds:
        print("zero seeds in input", file=sys.stderr)
        return EXIT_ZERO_YIELD
    _require_backend_choice(args)
    checkpoints: dict[str, dict] = {}
    if args.resume:
        if not args.checkpoint_dir:
            raise CliError("--resume needs --checkpoint-dir", EXIT_CONFIG)
        for i in range(len(seeds)):
            path = Path(args.checkpoint_dir) / f"seed_{i}.json"
            if path.exists():
                checkpoints[str(i)] = json.loads(path.read_text())
    payload = {
        "seeds": seeds,
        "simulate": args.simulate,
        "dsn": args.dsn,
        "config": _config_sections(args),
        "checkpoints": checkpoints,
    }
    doc = client.post("/generate", payload)

    records = [CorpusRecord.from_json(r) for r in doc["records"]]
    write_corpus(records, args.out)
    if args.stats_out:
        _write_output(args.stats_out, _stable_json(doc["stats"]))
    if args.checkpoint_dir:
        outdir = Path(args.checkpoint_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        for key, checkpoint in doc["checkpoints"].items():
            (outdir / f"seed_{key}.json").write_text(_stable_json(checkpoint))
    for report in doc["seed_reports"]:
        flag = "ok" if report["accepted"] else f"rejected ({report['reason']})"
        print(
            f"seed: {flag} kept={report['kept']} harvested={report['harvested']} "
            f"nodes={report['nodes']} t0={report['t0']}"
        )
    stats = doc["stats"]
    print(f"corpus: {stats['record_count']} records -> {args.out}")
    if not records:
        return EXIT_ZERO_YIELD
    return EXIT_OK


def cmd_bench(args, client: ServiceClient) -> int:
    queries = load_workload(_read_text(args.workload, "workload file"))
    rewrites = None
    if args.rewrites:
        rewrites = load_workload(_read_text(args.rewrites, "rewrites file"))
    _require_backend_choice(args)
    executor: dict = {}
    if args.timeout_seconds is not None:
        executor["timeout_seconds"] = args.timeout_seconds
    payload = {
        "queries": queries,
        "rewrites": rewrites,
        "simulate": args.simulate,
        "dsn": args.dsn,
        "executor": executor,
    }
    doc = client.post("/bench", payload)
    _write_output(args.out, _stable_json(doc))
    print(
        f"bench: mean={doc['mean']:.2f} median={doc['median']:.2f} "
        f"p75={doc['p75']:.2f} p95={doc['p95']:.2f} "
        f"equivalence={doc['equivalence_rate']:.2f} timeouts={doc['timeout_count']}"
    )
    return EXIT_OK


def cmd_advantage(args, client: ServiceClient) -> int:
    doc = _read_json(args.rewards, "rewards file")
    rewards = doc["rewards"] if isinstance(doc, dict) else doc
    payload: dict = {"rewards": rewards}
    if args.config:
        sections = parse_toml_subset(_read_text(args.config, "config file"))
        payload["config"] = sections.get("reward", {})
    result = client.post("/kernel/anchored-advantage", payload)
    _write_output(args.out, _stable_json(result))
    return EXIT_OK


def cmd_rollout_plan(args, client: ServiceClient) -> int:
    doc = _read_json(args.pilot_stats, "pilot stats file")
    pilots = doc["pilots"] if isinstance(doc, dict) else doc
    weights = client.post("/kernel/rollout-weights", {"pilots": pilots})["weights"]
    plan = client.post(
        "/kernel/allocate-budget",
        {"weights": weights, "total_budget": args.budget, "pilot_size": args.pilot_size},
    )
    _write_output(args.out, _stable_json(plan))
    return EXIT_OK


def cmd_repair(args, client: ServiceClient) -> int:
    candidates = load_workload(_read_text(args.queries, "queries file"))
    originals = None
    if args.originals:
        originals = load_workload(_read_text(args.originals, "originals file"))
        if len(originals) != len(candidates):
            raise CliError("originals must align one-to-one with queries", EXIT_CONFIG)
    _require_backend_choice(args)
    pairs = [
        {"original": originals[i] if originals else None, "candidate": sql}
        for i, sql in enumerate(candidates)
    ]
    doc = client.post(
        "/repair",
        {
            "pairs": pairs,
            "simulate": args.simulate,
            "dsn": args.dsn,
            "max_rounds": args.max_rounds,
        },
    )
    lines = [f"{entry['output_sql']};" for entry in doc["results"]]
    _write_output(args.out, "\n".join(lines) + "\n")
    repaired = sum(1 for e in doc["results"] if e["status"] == "repaired")
    fallbacks = sum(1 for e in doc["results"] if e["status"] == "fallback")
    print(f"repair: {len(lines)} queries, {repaired} repaired, {fallbacks} fallbacks")
    return EXIT_OK


def cmd_stats(args, client: ServiceClient) -> int:
    from .corpus import read_corpus

    try:
        records = read_corpus(args.corpus)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read corpus: {exc}", EXIT_CONFIG) from exc
    doc = client.post("/corpus/stats", {"records": [r.to_json() for r in records]})
    _write_output(args.out, _stable_json(doc))
    if doc["record_count"]:
        print(
            f"stats: {doc['record_count']} records, "
            f"mean tokens {doc['mean_token_count']:.2f}, "
            f"mean predicates {doc['mean_predicate_count']:.2f}, "
            f"mean subqueries {doc['mean_subquery_count']:.2f}",
            file=sys.stderr,
        )
    else:
        print("stats: empty corpus (means absent)", file=sys.stderr)
    return EXIT_OK


def cmd_export_sft(args, client: ServiceClient) -> int:
    from .corpus import read_corpus

    try:
        records = read_corpus(args.corpus)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read corpus: {exc}", EXIT_CONFIG) from exc
    _require_backend_choice(args)
    doc = client.post(
        "/corpus/export-sft",
        {
            "records": [r.to_json() for r in records],
            "with_plans": not args.no_plans,
            "simulate": args.simulate,
            "dsn": args.dsn,
        },
    )
    _write_output(args.out, "\n".join(doc["lines"]) + ("\n" if doc["lines"] else ""))
    print(f"export: {len(doc['lines'])} records")
    return EXIT_OK


def cmd_strategies(args, client: ServiceClient) -> int:
    doc = client.get("/strategies")
    _write_output(args.out, _stable_json(doc["strategies"]))
    return EXIT_OK


def cmd_serve(args, _client=None) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--simulate", action="store_true", help="use the in-memory fixture backend")
    p.add_argument("--dsn", default=None, help="PostgreSQL DSN (or env DATABASE_URL)")
    p.add_argument("--timeout-seconds", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slowforge",
        description="Slow-SQL corpus generation, benchmarking, repair, and alignment math",
    )
    parser.add_argument("--server", default=None, help="service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="gate seeds, search, and write a corpus")
    p.add_argument("--seeds", required=True)
    _add_backend_flags(p)
    p.add_argument("--config", default=None, help="pipeline TOML file")
    p.add_argument("--out", default="corpus.jsonl")
    p.add_argument("--stats-out", default=None)
    p.add_argument("--checkpoint-dir", default=None)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="search rng seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="measure a workload, optionally against rewrites")
    p.add_argument("--workload", required=True)
    p.add_argument("--rewrites", default=None)
    _add_backend_flags(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("advantage", help="anchored group advantages from a rewards file")
    p.add_argument("--rewards", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("rollout-plan", help="budget allocation from pilot statistics")
    p.add_argument("--pilot-stats", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--pilot-size", type=int, default=2)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_rollout_plan)

    p = sub.add_parser("repair", help="verify queries and regenerate failures")
    p.add_argument("--queries", required=True)
    p.add_argument("--originals", default=None)
    _add_backend_flags(p)
    p.add_argument("--max-rounds", type=int, default=2)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("stats", help="statistics for a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-sft", help="emit SFT-ready JSON lines from a corpus")
    p.add_argument("--corpus", required=True)
    _add_backend_flags(p)
    p.add_argument("--no-plans", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_export_sft)

    p = sub.add_parser("strategies", help="export the slowdown-strategy manifest")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_strategies)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    client = ServiceClient(args.server)
    try:
        return args.func(args, client)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except httpx.HTTPError as exc:
        print(f"error: service unreachable: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
