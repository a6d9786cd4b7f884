"""End-to-end run: plan -> gateway -> parse -> signals -> evaluation -> report."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from . import __version__
from .config import RunConfig
from .corpus import (
    Corpus,
    SentimentLabel,
    filter_without_pair_mention,
    group_by_ticker_day,
    load_corpus,
    token_stats,
)
from .errors import (
    AuthError,
    ConfigError,
    DegenerateSeries,
    EmptyInput,
    EmptySelection,
    MissingTicker,
)
from .evaluation import (
    ClassificationMetrics,
    ZeroPolicy,
    classification_metrics,
    correlation_matrix,
    cost_report,
    directional_accuracy,
    filtered_evaluation,
    pearson,
    project_daily_cost,
)
from .gateway import (
    ChatExchange,
    FailedRequest,
    Fixture,
    GenerationParams,
    LiveBackend,
    ReplayBackend,
    RetryPolicy,
    run_batch,
)
from .parsing import parse_response
from .prompts import (
    Granularity,
    OutputKind,
    PromptTemplate,
    build_registry,
    load_template_overrides,
    lookup_template,
    plan_requests,
)
from .signals import (
    SentimentObservation,
    aggregate_daily,
    finbert_class,
    finbert_score,
    join_sentiment_returns,
    load_market_dir,
    load_probabilities,
    observation_from_label,
)

TRUTH_SERIES_ID = "TrueSentiment"
RETURNS_SERIES_ID = "Returns"


@dataclass
class ModelOutputs:
    """Everything one model contributes to the evaluation."""

    model_id: str
    observations: list[SentimentObservation] = field(default_factory=list)
    preds: dict[str, SentimentLabel | None] | None = None
    exchanges: list[ChatExchange] = field(default_factory=list)
    headline_counts: list[int] = field(default_factory=list)
    parse_failures: int = 0
    lenient_matches: int = 0
    gateway_failures: int = 0
    warnings: list[str] = field(default_factory=list)


def make_backend(config: RunConfig):
    if config.backend.type == "replay":
        if config.backend.fixture_path is None:
            raise ConfigError("replay backend needs backend.fixture_path")
        return ReplayBackend(Fixture.load(config.backend.fixture_path))
    if config.backend.type == "live":
        key = config.api_key()
        if not key:
            raise AuthError(f"environment variable {config.backend.api_key_env} is not set")
        return LiveBackend(
            base_url=config.backend.base_url,
            api_key=key,
            model_name=config.backend.model_name,
            timeout_s=config.backend.timeout_s,
        )
    raise ConfigError(f"unknown backend type {config.backend.type!r}")


def _gateway_policy(config: RunConfig) -> RetryPolicy:
    # replay never benefits from waiting between scripted failures
    if config.backend.type == "replay":
        return RetryPolicy(
            max_attempts=config.retry.max_attempts,
            base_backoff_s=0.0,
            backoff_multiplier=config.retry.backoff_multiplier,
        )
    return config.retry


def run_template(
    corpus: Corpus,
    template: PromptTemplate,
    backend,
    config: RunConfig,
    group_sizes: dict[tuple[str, date], int],
) -> ModelOutputs:
    """Dispatch one template over the corpus and parse every response."""
    out = ModelOutputs(model_id=template.id)
    is_single_class = (
        template.granularity is Granularity.SINGLE_HEADLINE
        and template.kind is OutputKind.CLASS_TOKEN
    )
    if is_single_class:
        out.preds = {}
    prompts = plan_requests(corpus, template)
    params = GenerationParams(
        model_name=config.backend.model_name,
        max_tokens=template.max_tokens,
        temperature=template.temperature,
    )
    results = run_batch(
        backend,
        prompts,
        params,
        parallelism=config.parallelism,
        policy=_gateway_policy(config),
        strict=config.strict,
    )
    for prompt, item in zip(prompts, results):
        scope = prompt.scope
        if isinstance(item, FailedRequest):
            out.gateway_failures += 1
            out.warnings.append(f"{template.id} {scope}: {item.error}")
            if is_single_class:
                out.preds[scope.record_id] = None
            continue
        out.exchanges.append(item)
        out.headline_counts.append(scope.n_headlines)
        outcome = parse_response(item.response_text, template.kind, set(scope.tickers))
        if outcome.error is not None:
            if isinstance(outcome.error, MissingTicker):
                # salvage the tickers that did parse
                for ticker, parsed in sorted(outcome.error.partial.items()):
                    out.observations.append(
                        SentimentObservation(
                            model_id=template.id,
                            ticker=ticker,
                            day=scope.day,
                            value=parsed.value,
                            n_headlines=group_sizes.get((ticker, scope.day), 1),
                        )
                    )
                    out.lenient_matches += parsed.lenient
                out.parse_failures += len(outcome.error.missing)
            else:
                out.parse_failures += 1
            if is_single_class:
                out.preds[scope.record_id] = None
            out.warnings.append(f"{template.id} {scope.day}: {outcome.error}")
            continue
        if outcome.by_ticker is not None:
            for ticker, parsed in sorted(outcome.by_ticker.items()):
                out.observations.append(
                    SentimentObservation(
                        model_id=template.id,
                        ticker=ticker,
                        day=scope.day,
                        value=parsed.value,
                        n_headlines=group_sizes.get((ticker, scope.day), 1),
                    )
                )
                out.lenient_matches += parsed.lenient
            out.warnings.extend(f"{template.id} {scope.day}: {w}" for w in outcome.warnings)
        else:
            parsed = outcome.value
            out.lenient_matches += parsed.lenient
            if is_single_class:
                out.preds[scope.record_id] = parsed.class_label
            out.observations.append(
                SentimentObservation(
                    model_id=template.id,
                    ticker=scope.ticker,
                    day=scope.day,
                    value=parsed.value,
                    record_id=scope.record_id,
                    n_headlines=scope.n_headlines,
                )
            )
    return out


def finbert_outputs(corpus: Corpus, probabilities_path: Path) -> tuple[ModelOutputs, ModelOutputs]:
    """Class and score models derived from the classifier probabilities file."""
    probs = load_probabilities(probabilities_path)
    class_out = ModelOutputs(model_id="FinBERT", preds={})
    score_out = ModelOutputs(model_id="FinBERT-N")
    for record in corpus.records:
        row = probs.get(record.id)
        if row is None:
            class_out.preds[record.id] = None
            class_out.parse_failures += 1
            score_out.parse_failures += 1
            class_out.warnings.append(f"no probability row for record {record.id}")
            continue
        p_pos, p_neg, p_neu = row
        label = finbert_class(p_pos, p_neg, p_neu)
        class_out.preds[record.id] = label
        class_out.observations.append(
            observation_from_label("FinBERT", record.ticker, record.timestamp.date(), label, record.id)
        )
        score_out.observations.append(
            SentimentObservation(
                model_id="FinBERT-N",
                ticker=record.ticker,
                day=record.timestamp.date(),
                value=finbert_score(p_pos, p_neg, p_neu),
                record_id=record.id,
            )
        )
    return class_out, score_out


def truth_observations(corpus: Corpus) -> list[SentimentObservation]:
    return [
        observation_from_label(TRUTH_SERIES_ID, r.ticker, r.timestamp.date(), r.label, r.id)
        for r in corpus.records
    ]


def _daily_map(observations: list[SentimentObservation]) -> dict[tuple[str, date], float]:
    return {(d.ticker, d.day): d.score for d in aggregate_daily(observations)}


def _classification_block(metrics: ClassificationMetrics | None) -> dict | None:
    if metrics is None:
        return None
    return {
        "accuracy": metrics.accuracy,
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "s_mae": metrics.s_mae,
        "n_scored": metrics.n_scored,
        "unscored": metrics.unscored,
        "per_class": {
            label.token: {
                "precision": pc.precision,
                "recall": pc.recall,
                "f1": pc.f1,
                "support": pc.support,
            }
            for label, pc in metrics.per_class.items()
        },
        "confusion": [list(row) for row in metrics.confusion.counts],
    }


def _per_ticker_subsets(corpus: Corpus) -> dict[str, Corpus]:
    out: dict[str, Corpus] = {}
    for ticker in sorted({r.ticker for r in corpus.records}):
        records = tuple(r for r in corpus.records if r.ticker == ticker)
        out[ticker] = Corpus(records=records, universe=corpus.universe)
    return out


def build_report(config: RunConfig, corpus: Corpus, model_outputs: list[ModelOutputs]) -> dict:
    """Assemble the full machine-readable evaluation report."""
    returns = load_market_dir(config.market_data_dir, config.universe, mode=config.return_mode)
    returns_map = {(r.ticker, r.day): r.ret for r in returns}
    group_sizes = {key: len(recs) for key, recs in group_by_ticker_day(corpus).items()}

    # correlation panel: (ticker, day) cells that have both headlines and a return
    panel_keys = sorted(key for key in group_sizes if key in returns_map)
    truth_map = _daily_map(truth_observations(corpus))

    zero_policy = ZeroPolicy(config.zero_policy)
    models_block: dict[str, dict] = {}
    class_preds: dict[str, dict[str, SentimentLabel | None]] = {}
    series: dict[str, list[float]] = {}
    zero_filled: dict[str, int] = {}

    for out in model_outputs:
        daily = aggregate_daily(out.observations)
        joined = join_sentiment_returns(daily, returns, policy=config.join_policy)
        daily_map = {(d.ticker, d.day): d.score for d in daily}
        column = [daily_map.get(key, 0.0) for key in panel_keys]
        series[out.model_id] = column
        zero_filled[out.model_id] = sum(1 for key in panel_keys if key not in daily_map)

        market: dict | None = None
        if joined.rows:
            da_by_policy = {
                policy.value: directional_accuracy(joined, policy).value for policy in ZeroPolicy
            }
            chosen = directional_accuracy(joined, zero_policy)
            try:
                r = pearson(column, [returns_map[key] for key in panel_keys])
            except DegenerateSeries:
                r = None
            market = {
                "pearson_r": r,
                "directional_accuracy": chosen.value,
                "da_by_policy": da_by_policy,
                "per_ticker_da": chosen.per_ticker,
                "n_days": chosen.n_days,
                "n_counted": chosen.n_counted,
                "zero_sentiment_days": chosen.zero_sentiment_days,
                "dropped_days": len(joined.dropped_days),
            }

        classification = None
        if out.preds is not None:
            class_preds[out.model_id] = out.preds
            try:
                classification = classification_metrics(out.preds, corpus)
            except EmptyInput:
                classification = None

        cost = None
        if out.exchanges:
            cost_metrics = cost_report(out.exchanges, out.headline_counts, config.price_per_1k)
            cost = {
                "total_prompt_tokens": cost_metrics.total_prompt_tokens,
                "total_completion_tokens": cost_metrics.total_completion_tokens,
                "mean_time_per_prompt": cost_metrics.mean_time_per_prompt,
                "mean_time_per_headline": cost_metrics.mean_time_per_headline,
                "mean_tokens_per_prompt": cost_metrics.mean_tokens_per_prompt,
                "mean_tokens_per_headline": cost_metrics.mean_tokens_per_headline,
                "estimated_cost_usd": cost_metrics.estimated_cost,
                "price_per_1k_tokens": cost_metrics.price_per_1k_tokens,
                "n_prompts": cost_metrics.n_prompts,
                "n_headlines": cost_metrics.n_headlines,
                "projected_daily_cost_usd": project_daily_cost(
                    cost_metrics.mean_tokens_per_headline,
                    config.projected_daily_articles,
                    config.price_per_1k,
                ),
            }

        models_block[out.model_id] = {
            "classification": _classification_block(classification),
            "market": market,
            "cost": cost,
            "parse_failures": out.parse_failures,
            "lenient_matches": out.lenient_matches,
            "gateway_failures": out.gateway_failures,
            "warnings": sorted(out.warnings),
        }

    # Table-6-style re-evaluation on the no-pair-mention subset
    subset = filter_without_pair_mention(corpus)
    filtered_block = {}
    if class_preds:
        for model_id, metrics in filtered_evaluation(corpus, class_preds).items():
            filtered_block[model_id] = _classification_block(metrics)

    # Table-5-style best model per pair, over per-ticker classification metrics
    best_per_pair: dict[str, dict[str, str]] = {}
    per_ticker_metrics: dict[str, dict[str, ClassificationMetrics]] = {}
    for ticker, sub_corpus in _per_ticker_subsets(corpus).items():
        sub_ids = {r.id for r in sub_corpus.records}
        for model_id, preds in sorted(class_preds.items()):
            sub_preds = {rid: lab for rid, lab in preds.items() if rid in sub_ids}
            try:
                per_ticker_metrics.setdefault(ticker, {})[model_id] = classification_metrics(
                    sub_preds, sub_corpus
                )
            except EmptyInput:
                continue
        candidates = per_ticker_metrics.get(ticker, {})
        if candidates:
            best_per_pair[ticker] = {
                "accuracy": max(sorted(candidates), key=lambda m: candidates[m].accuracy),
                "precision": max(sorted(candidates), key=lambda m: candidates[m].precision),
                "recall": max(sorted(candidates), key=lambda m: candidates[m].recall),
                "f1": max(sorted(candidates), key=lambda m: candidates[m].f1),
                "s_mae": min(sorted(candidates), key=lambda m: candidates[m].s_mae),
            }

    # correlation matrix over models + truth + returns, skipping degenerate series
    series[TRUTH_SERIES_ID] = [truth_map.get(key, 0.0) for key in panel_keys]
    series[RETURNS_SERIES_ID] = [returns_map[key] for key in panel_keys]
    usable: dict[str, list[float]] = {}
    excluded: list[str] = []
    for name in sorted(series):
        column = series[name]
        if len(column) >= 2 and max(column) > min(column):
            usable[name] = column
        else:
            excluded.append(name)
    correlation_block = None
    if len(usable) >= 2:
        labels, matrix = correlation_matrix(usable)
        per_ticker_r: dict[str, dict[str, float | None]] = {}
        tickers = sorted({t for t, _ in panel_keys})
        for name in labels:
            if name == RETURNS_SERIES_ID:
                continue
            per_ticker_r[name] = {}
            for ticker in tickers:
                idx = [i for i, (t, _) in enumerate(panel_keys) if t == ticker]
                x = [usable[name][i] for i in idx]
                y = [returns_map[panel_keys[i]] for i in idx]
                try:
                    per_ticker_r[name][ticker] = pearson(x, y)
                except DegenerateSeries:
                    per_ticker_r[name][ticker] = None
        correlation_block = {
            "labels": labels,
            "matrix": matrix,
            "per_ticker_pearson": per_ticker_r,
            "excluded_zero_variance": excluded,
            "zero_filled_cells": zero_filled,
        }

    try:
        headline_stats = token_stats(corpus, "headline")
        headline_block = {
            "mean": headline_stats.mean,
            "std_dev": headline_stats.std_dev,
            "count": headline_stats.count,
        }
    except EmptySelection:
        headline_block = None
    try:
        article_stats = token_stats(corpus, "article")
        article_block = {
            "mean": article_stats.mean,
            "std_dev": article_stats.std_dev,
            "count": article_stats.count,
        }
    except EmptySelection:
        article_block = None

    return {
        "tool": {"name": "fxsentibench", "version": __version__},
        "settings": {
            "zero_policy": config.zero_policy,
            "join_policy": config.join_policy,
            "return_mode": config.return_mode,
            "price_per_1k": config.price_per_1k,
            "projected_daily_articles": config.projected_daily_articles,
            "model_name": config.backend.model_name,
        },
        "corpus": {
            "n_records": len(corpus),
            "n_skipped_rows": len(corpus.skipped),
            "skipped_rows": [
                {"row": i.row, "field": i.field, "reason": i.reason} for i in corpus.skipped
            ],
            "universe": sorted(corpus.universe),
            "no_pair_mention_subset_size": len(subset),
            "token_stats": {"headline": headline_block, "article": article_block},
        },
        "panel": {
            "n_cells": len(panel_keys),
            "tickers": sorted({t for t, _ in panel_keys}),
            "days": sorted({d.isoformat() for _, d in panel_keys}),
            "n_return_rows": len(returns),
        },
        "models": models_block,
        "filtered_classification": filtered_block,
        "best_model_per_pair": best_per_pair,
        "correlation": correlation_block,
    }


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _templates_hash(templates) -> str:
    payload = json.dumps(
        [
            [t.id, t.body, t.kind.value, t.granularity.value, t.max_tokens, t.temperature]
            for t in sorted(templates, key=lambda t: t.id)
        ],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_manifest(config: RunConfig, templates, started: str, finished: str) -> dict:
    manifest = {
        "tool_version": __version__,
        "started_utc": started,
        "finished_utc": finished,
        "corpus_sha256": _sha256_file(config.corpus_path),
        "templates_sha256": _templates_hash(templates),
        "fixture_sha256": (
            _sha256_file(config.backend.fixture_path)
            if config.backend.type == "replay" and config.backend.fixture_path
            else None
        ),
        "config": {
            "corpus_path": str(config.corpus_path),
            "market_data_dir": str(config.market_data_dir),
            "output_dir": str(config.output_dir),
            "universe": sorted(config.universe),
            "prompts": list(config.prompts),
            "backend": {
                "type": config.backend.type,
                "model_name": config.backend.model_name,
                "base_url": config.backend.base_url,
                "fixture_path": str(config.backend.fixture_path) if config.backend.fixture_path else None,
            },
            "parallelism": config.parallelism,
            "price_per_1k": config.price_per_1k,
            "zero_policy": config.zero_policy,
            "join_policy": config.join_policy,
            "return_mode": config.return_mode,
            "probabilities_path": str(config.probabilities_path) if config.probabilities_path else None,
            "projected_daily_articles": config.projected_daily_articles,
            "strict": config.strict,
            "require_deterministic": config.require_deterministic,
        },
    }
    return manifest


def run_pipeline(config: RunConfig) -> tuple[dict, dict]:
    """Execute the full benchmark; returns (report, manifest)."""
    started = datetime.now(timezone.utc).isoformat()
    corpus = load_corpus(config.corpus_path, config.universe, strict=False)
    overrides = (
        load_template_overrides(config.template_overrides_path)
        if config.template_overrides_path
        else None
    )
    templates = build_registry(overrides)
    backend = make_backend(config)
    group_sizes = {key: len(recs) for key, recs in group_by_ticker_day(corpus).items()}

    model_outputs: list[ModelOutputs] = []
    if config.probabilities_path is not None:
        class_out, score_out = finbert_outputs(corpus, config.probabilities_path)
        model_outputs.extend([class_out, score_out])
    for prompt_id in config.prompts:
        template = lookup_template(templates, prompt_id)
        model_outputs.append(run_template(corpus, template, backend, config, group_sizes))

    report = build_report(config, corpus, model_outputs)
    finished = datetime.now(timezone.utc).isoformat()
    manifest = build_manifest(config, templates, started, finished)
    return report, manifest
