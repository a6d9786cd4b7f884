"""Declarative run configuration for the CLI orchestrator."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import DEFAULT_UNIVERSE
from .errors import ConfigError
from .evaluation import ZeroPolicy
from .gateway import RetryPolicy
from .prompts import build_registry, load_template_overrides

ALL_PROMPT_IDS = ("P1", "P2", "P3", "P4", "P5", "P6", "P1N", "P2N", "P3N", "P4N", "P5N", "P6N")


@dataclass(frozen=True)
class BackendSettings:
    type: str = "replay"
    fixture_path: Path | None = None
    base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-3.5-turbo"
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 60.0


@dataclass(frozen=True)
class RunConfig:
    corpus_path: Path
    market_data_dir: Path
    output_dir: Path
    backend: BackendSettings = BackendSettings()
    universe: frozenset[str] = DEFAULT_UNIVERSE
    prompts: tuple[str, ...] = ALL_PROMPT_IDS
    parallelism: int = 1
    price_per_1k: float = 0.002
    zero_policy: str = "exclude"
    join_policy: str = "drop"
    return_mode: str = "close_to_close"
    probabilities_path: Path | None = None
    template_overrides_path: Path | None = None
    projected_daily_articles: int = 5000
    strict: bool = False
    require_deterministic: bool = False
    retry: RetryPolicy = RetryPolicy()

    def api_key(self) -> str | None:
        return os.environ.get(self.backend.api_key_env)


_TOP_LEVEL_KEYS = {
    "corpus_path",
    "market_data_dir",
    "output_dir",
    "backend",
    "universe",
    "prompts",
    "parallelism",
    "price_per_1k",
    "zero_policy",
    "join_policy",
    "return_mode",
    "probabilities_path",
    "template_overrides_path",
    "projected_daily_articles",
    "strict",
    "require_deterministic",
    "retry",
}
_BACKEND_KEYS = {"type", "fixture_path", "base_url", "model_name", "api_key_env", "timeout_s"}
_RETRY_KEYS = {"max_attempts", "base_backoff_s", "backoff_multiplier"}


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a JSON run config; relative paths resolve against the config file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
    base = path.parent

    def resolve(key: str, required: bool = False) -> Path | None:
        raw = data.get(key)
        if raw is None:
            if required:
                raise ConfigError(f"{path}: missing required key {key!r}")
            return None
        return (base / raw).resolve() if not Path(raw).is_absolute() else Path(raw)

    backend_raw = data.get("backend", {})
    if not isinstance(backend_raw, dict):
        raise ConfigError(f"{path}: 'backend' must be an object")
    unknown = set(backend_raw) - _BACKEND_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown backend keys: {sorted(unknown)}")
    fixture_raw = backend_raw.get("fixture_path")
    fixture_path = None
    if fixture_raw is not None:
        fixture_path = (base / fixture_raw).resolve() if not Path(fixture_raw).is_absolute() else Path(fixture_raw)
    backend = BackendSettings(
        type=backend_raw.get("type", "replay"),
        fixture_path=fixture_path,
        base_url=backend_raw.get("base_url", BackendSettings.base_url),
        model_name=backend_raw.get("model_name", BackendSettings.model_name),
        api_key_env=backend_raw.get("api_key_env", BackendSettings.api_key_env),
        timeout_s=float(backend_raw.get("timeout_s", BackendSettings.timeout_s)),
    )

    retry_raw = data.get("retry", {})
    if not isinstance(retry_raw, dict) or set(retry_raw) - _RETRY_KEYS:
        raise ConfigError(f"{path}: 'retry' accepts keys {sorted(_RETRY_KEYS)}")
    retry = RetryPolicy(
        max_attempts=int(retry_raw.get("max_attempts", 3)),
        base_backoff_s=float(retry_raw.get("base_backoff_s", 1.0)),
        backoff_multiplier=float(retry_raw.get("backoff_multiplier", 2.0)),
    )

    return RunConfig(
        corpus_path=resolve("corpus_path", required=True),
        market_data_dir=resolve("market_data_dir", required=True),
        output_dir=resolve("output_dir", required=True),
        backend=backend,
        universe=frozenset(data.get("universe", DEFAULT_UNIVERSE)),
        prompts=tuple(data.get("prompts", ALL_PROMPT_IDS)),
        parallelism=int(data.get("parallelism", 1)),
        price_per_1k=float(data.get("price_per_1k", 0.002)),
        zero_policy=data.get("zero_policy", "exclude"),
        join_policy=data.get("join_policy", "drop"),
        return_mode=data.get("return_mode", "close_to_close"),
        probabilities_path=resolve("probabilities_path"),
        template_overrides_path=resolve("template_overrides_path"),
        projected_daily_articles=int(data.get("projected_daily_articles", 5000)),
        strict=bool(data.get("strict", False)),
        require_deterministic=bool(data.get("require_deterministic", False)),
        retry=retry,
    )


def validate_run_config(config: RunConfig) -> list[str]:
    """Path, ID, and enum checks; returns human-readable diagnostics (empty = ok)."""
    problems: list[str] = []
    if not config.corpus_path.exists():
        problems.append(f"corpus_path: file not found: {config.corpus_path}")
    if not config.market_data_dir.is_dir():
        problems.append(f"market_data_dir: directory not found: {config.market_data_dir}")
    if config.probabilities_path is not None and not config.probabilities_path.exists():
        problems.append(f"probabilities_path: file not found: {config.probabilities_path}")

    overrides = None
    if config.template_overrides_path is not None:
        if not config.template_overrides_path.exists():
            problems.append(f"template_overrides_path: file not found: {config.template_overrides_path}")
        else:
            try:
                overrides = load_template_overrides(config.template_overrides_path)
            except ConfigError as exc:
                problems.append(str(exc))
    try:
        known = {t.id for t in build_registry(overrides)}
        for prompt_id in config.prompts:
            if prompt_id not in known:
                problems.append(f"prompts: unknown template id {prompt_id!r}")
    except ConfigError as exc:
        problems.append(str(exc))

    if config.backend.type not in ("replay", "live"):
        problems.append(f"backend.type: must be replay or live, got {config.backend.type!r}")
    if config.backend.type == "replay":
        if config.backend.fixture_path is None:
            problems.append("backend.fixture_path: required for replay backend")
        elif not config.backend.fixture_path.exists():
            problems.append(f"backend.fixture_path: file not found: {config.backend.fixture_path}")
    if config.backend.type == "live" and config.require_deterministic:
        problems.append("require_deterministic: incompatible with a live backend")
    if config.parallelism < 1:
        problems.append("parallelism: must be >= 1")
    if config.zero_policy not in [p.value for p in ZeroPolicy]:
        problems.append(f"zero_policy: must be one of {[p.value for p in ZeroPolicy]}")
    if config.join_policy not in ("drop", "error"):
        problems.append("join_policy: must be drop or error")
    if config.return_mode not in ("close_to_close", "open_to_close"):
        problems.append("return_mode: must be close_to_close or open_to_close")
    if config.price_per_1k < 0:
        problems.append("price_per_1k: must be >= 0")
    return problems


def apply_overrides(
    config: RunConfig,
    prompts: str | None = None,
    backend: str | None = None,
    parallelism: int | None = None,
    zero_policy: str | None = None,
    output: str | None = None,
) -> RunConfig:
    """CLI flag overrides, one-to-one with config fields."""
    if prompts is not None:
        config = replace(config, prompts=tuple(p.strip() for p in prompts.split(",") if p.strip()))
    if backend is not None:
        config = replace(config, backend=replace(config.backend, type=backend))
    if parallelism is not None:
        config = replace(config, parallelism=parallelism)
    if zero_policy is not None:
        config = replace(config, zero_policy=zero_policy)
    if output is not None:
        config = replace(config, output_dir=Path(output).resolve())
    return config
