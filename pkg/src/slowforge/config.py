"""Pipeline configuration: one TOML-style document covering the search,
reward, executor, and seed-gate knobs.

Python 3.10 ships no TOML reader and the deployment environment pins the
dependency set, so a small reader for the needed subset lives here: [section]
headers, key = value pairs, strings, booleans, integers, floats, and comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .corpus import SeedGate
from .executor import ExecutorConfig
from .kernel import RewardConfig
from .search import MctsConfig


class ConfigError(Exception):
    pass


def parse_toml_subset(text: str) -> dict[str, dict[str, object]]:
    doc: dict[str, dict[str, object]] = {}
    section = doc.setdefault("", {})
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            section = doc.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        section[key.strip()] = _parse_value(value.strip(), lineno)
    return doc


def _parse_value(text: str, lineno: int) -> object:
    if not text:
        raise ConfigError(f"line {lineno}: missing value")
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text.startswith("'") and text.endswith("'") and len(text) >= 2:
        return text[1:-1]
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    if lowered in ("none", "null"):
        return None
    try:
        if any(c in text for c in ".eE") and not text.lstrip("+-").isdigit():
            return float(text)
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r}") from exc


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    search: MctsConfig = field(default_factory=MctsConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    executor: ExecutorConfig = field(default_factory=ExecutorConfig)
    seed_gate: SeedGate = field(default_factory=SeedGate)
    min_slowdown_ratio: float = 2.0


_SECTIONS = {
    "search": MctsConfig,
    "reward": RewardConfig,
    "executor": ExecutorConfig,
    "seed_gate": SeedGate,
}


def load_config(path) -> PipelineConfig:
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return build_config(parse_toml_subset(text))


def build_config(doc: dict[str, dict[str, object]]) -> PipelineConfig:
    """Assemble a PipelineConfig from a sections dict (top-level keys live
    under the empty-string section)."""
    known = set(_SECTIONS) | {""}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")

    built = {}
    for section, cls in _SECTIONS.items():
        values = doc.get(section, {})
        allowed = {f.name for f in fields(cls)}
        bad = set(values) - allowed
        if bad:
            raise ConfigError(f"[{section}] has unknown key(s): {sorted(bad)}")
        try:
            built[section] = cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc

    top = doc.get("", {})
    extra_top = set(top) - {"min_slowdown_ratio"}
    if extra_top:
        raise ConfigError(f"unknown top-level key(s): {sorted(extra_top)}")
    ratio = top.get("min_slowdown_ratio", 2.0)
    if not isinstance(ratio, (int, float)) or ratio <= 0:
        raise ConfigError("min_slowdown_ratio must be a positive number")

    return PipelineConfig(
        search=built["search"],
        reward=built["reward"],
        executor=built["executor"],
        seed_gate=built["seed_gate"],
        min_slowdown_ratio=float(ratio),
    )
