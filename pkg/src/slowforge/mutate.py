"""Uniform mutation-provider boundary for search expansion.

Two modes: rule_guided applies a slowdown strategy (deterministic AST rewrite
by default, or a strategy prompt through the model client when configured),
free_form asks the model client to introduce inefficiencies directly. Model
output is never trusted: every candidate must parse before it reaches the
search tree, and provider failures skip the expansion attempt rather than
aborting the search.
"""

from __future__ import annotations

import importlib.resources
import json
import logging
import os
import random
import re
import threading
from dataclasses import dataclass

import httpx

from . import degrade
from .degrade import SlowdownStrategy, StrategyHistory
from .sqltree import ParseError, parse, render

log = logging.getLogger("slowforge.mutate")

RULE_GUIDED = "rule_guided"
FREE_FORM = "free_form"

_FENCE_RE = re.compile(r"```(?:sql)?\s*\n(.*?)```", re.DOTALL | re.IGNORECASE)


class ProviderUnavailable(Exception):
    """The remote endpoint is down or not configured."""


class ExtractionError(Exception):
    """No usable SQL could be extracted from a model response."""


@dataclass(frozen=True, slots=True)
class MutationRequest:
    parent_sql: str
    seed_sql: str
    schema_ddl: str
    mode: str
    strategy: SlowdownStrategy | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (RULE_GUIDED, FREE_FORM):
            raise ValueError(f"unknown mutation mode {self.mode!r}")
        if (self.strategy is not None) != (self.mode == RULE_GUIDED):
            raise ValueError("strategy must be present exactly for rule_guided requests")


@dataclass(frozen=True, slots=True)
class MutationResult:
    candidate_sql: str
    provider_id: str
    strategy_id: str | None = None
    raw_model_output: str | None = None


def load_template(name: str) -> str:
    return (importlib.resources.files("slowforge") / "templates" / name).read_text()


def extract_sql(text: str) -> str:
    """Pull SQL out of a model response: the last fenced code block wins;
    otherwise the whole response must itself parse."""
    blocks = _FENCE_RE.findall(text)
    for candidate in reversed(blocks):
        candidate = candidate.strip()
        if candidate:
            return candidate
    stripped = text.strip()
    if stripped:
        try:
            parse(stripped)
            return stripped
        except ParseError:
            pass
    raise ExtractionError("no SQL code block in model output")


def choose_mode(
    history: StrategyHistory,
    available: list[SlowdownStrategy],
    rng_seed: int,
    rule_prob: float,
) -> str:
    """rule_guided with probability rule_prob while unused strategies remain,
    otherwise free_form; deterministic for a fixed rng_seed."""
    if not available:
        return FREE_FORM
    rng = random.Random(rng_seed)
    return RULE_GUIDED if rng.random() < rule_prob else FREE_FORM


class ModelClient:
    """Generic chat-completion transport over HTTP.

    Endpoint, model name, and auth come from MODEL_ENDPOINT / MODEL_NAME /
    MODEL_API_KEY unless passed explicitly. Requests and responses are logged
    for audit; a bounded semaphore caps in-flight requests.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        max_in_flight: int = 4,
        timeout_seconds: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get("MODEL_ENDPOINT", "")
        self.model = model or os.environ.get("MODEL_NAME", "")
        self.api_key = api_key if api_key is not None else os.environ.get("MODEL_API_KEY", "")
        self.provider_id = f"model:{self.model or 'unconfigured'}"
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout_seconds, transport=transport)

    def complete(self, prompt: str) -> str:
        if not self.endpoint:
            raise ProviderUnavailable("MODEL_ENDPOINT is not configured")
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        log.debug("model request: %s", json.dumps(payload)[:2000])
        with self._sem:
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                raise ProviderUnavailable(f"model endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnavailable(f"model endpoint returned {response.status_code}")
        doc = response.json()
        log.debug("model response: %s", json.dumps(doc)[:2000])
        try:
            return doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"malformed completion payload: {exc}") from exc

    def close(self) -> None:
        self._client.close()


class MockModelClient:
    """Scripted stand-in for tests and offline runs."""

    def __init__(self, responses: list[str]):
        self.responses = list(responses)
        self.calls: list[str] = []
        self.provider_id = "model:mock"

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if not self.responses:
            raise ProviderUnavailable("mock script exhausted")
        return self.responses.pop(0)


class Mutator:
    """Dispatches mutation requests to the deterministic rule engine or to a
    model client; candidates are parse-checked before being returned."""

    def __init__(self, model_client=None, rule_via_model: bool = False):
        self.model_client = model_client
        self.rule_via_model = rule_via_model
        self._rule_guided_template = load_template("rule_guided.txt")
        self._free_form_template = load_template("free_form.txt")

    def mutate(self, req: MutationRequest) -> MutationResult:
        parse(req.parent_sql)  # precondition: parent must be well-formed
        if req.mode == RULE_GUIDED:
            assert req.strategy is not None
            if self.rule_via_model and self.model_client is not None:
                prompt = self._rule_guided_template.format(
                    schema=req.schema_ddl,
                    parent_sql=req.parent_sql,
                    strategy_description=req.strategy.prompt_template,
                )
                return self._via_model(prompt, req.strategy.id)
            transformed = degrade.apply(req.strategy, parse(req.parent_sql), req.rng_seed)
            return MutationResult(
                candidate_sql=render(transformed),
                provider_id="rule:deterministic",
                strategy_id=req.strategy.id,
            )
        if self.model_client is None:
            raise ProviderUnavailable("free_form mutation needs a model client")
        prompt = self._free_form_template.format(
            schema=req.schema_ddl, parent_sql=req.parent_sql
        )
        return self._via_model(prompt, None)

    def _via_model(self, prompt: str, strategy_id: str | None) -> MutationResult:
        raw = self.model_client.complete(prompt)
        candidate = extract_sql(raw)
        try:
            canonical = render(parse(candidate))
        except ParseError as exc:
            raise ExtractionError(f"model SQL does not parse: {exc}") from exc
        return MutationResult(
            candidate_sql=canonical,
            provider_id=getattr(self.model_client, "provider_id", "model:unknown"),
            strategy_id=strategy_id,
            raw_model_output=raw,
        )
