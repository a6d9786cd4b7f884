"""The twelve benchmark prompt templates and their rendering into backend requests."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path

from .corpus import Corpus, HeadlineRecord, group_by_day, group_by_ticker_day
from .errors import ConfigError, EmptyGroup, GranularityMismatch, UnknownTemplate


class OutputKind(Enum):
    CLASS_TOKEN = "class_token"
    NUMERIC_SCORE = "numeric_score"
    JSON_CLASS_MAP = "json_class_map"
    JSON_SCORE_MAP = "json_score_map"


class Granularity(Enum):
    SINGLE_HEADLINE = "single_headline"
    TICKER_DAY = "ticker_day"
    ALL_DAY = "all_day"


PLACEHOLDER_NAMES = ("ticker", "headline", "ticker_daily_headlines", "all_daily_headlines", "tickers")

_ALLOWED = {
    Granularity.SINGLE_HEADLINE: {"ticker", "headline"},
    Granularity.TICKER_DAY: {"ticker", "ticker_daily_headlines"},
    Granularity.ALL_DAY: {"all_daily_headlines", "tickers"},
}
_REQUIRED = {
    Granularity.SINGLE_HEADLINE: {"headline"},
    Granularity.TICKER_DAY: {"ticker_daily_headlines"},
    Granularity.ALL_DAY: {"all_daily_headlines"},
}

_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDER_NAMES) + r")\}")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    kind: OutputKind
    granularity: Granularity
    max_tokens: int
    temperature: float = 0.2

    def __post_init__(self):
        used = set(_PLACEHOLDER_RE.findall(self.body))
        missing = _REQUIRED[self.granularity] - used
        stray = used - _ALLOWED[self.granularity]
        if missing or stray:
            raise ConfigError(
                f"template {self.id}: placeholders {sorted(used)} do not fit "
                f"{self.granularity.value} (missing {sorted(missing)}, stray {sorted(stray)})"
            )
        if self.max_tokens < 1:
            raise ConfigError(f"template {self.id}: max_tokens must be >= 1")


@dataclass(frozen=True)
class PromptScope:
    """What one rendered prompt covers: a record, a ticker-day, or a whole day."""

    granularity: Granularity
    day: date
    record_id: str | None = None
    ticker: str | None = None
    tickers: tuple[str, ...] = ()
    n_headlines: int = 1


@dataclass(frozen=True)
class RenderedPrompt:
    template_id: str
    text: str
    scope: PromptScope
    expected_kind: OutputKind


_CLASS_INSTRUCTION_PLAIN = "Answer in one token: positive, negative, or neutral."
_CLASS_INSTRUCTION_TRADE = (
    "Answer in one token: positive for buy, negative for sell, or neutral for hold position"
)
_NUMERIC_INSTRUCTION = (
    "Provide only a number ranging from -1 to 1 in a list eg [0]. "
    "1 indicates a fully positive/bullish sentiment."
)

_P1_STEM = "Act as a financial expert holding {ticker}. How do you feel about the headline {headline}? "
_P2_STEM = "Act as a financial expert. Classify the sentiment for {ticker} based only on the headline {headline}. "
_P3_STEM = (
    "Act as a sentiment analysis model trained on financial news headlines. "
    "Classify the sentiment of the headline {headline}. "
)
_P4_STEM = (
    "Act as an expert at forex trading holding {ticker}. Based only on the headline {headline}, "
    "will you buy, sell or hold {ticker} in the short term? "
)
_P5_STEM = (
    "Act as an expert at forex trading holding {ticker}. Based only on the following list of "
    "headlines {ticker_daily_headlines}, will you buy, sell or hold {ticker} in the short term? "
)
_P6_STEM = (
    "Act as a sentiment analysis service of a financial platform. Based only on the following "
    "list of headlines {all_daily_headlines}, provide a summary of the daily sentiment for the "
    "forex pairs: {tickers}. "
)
_P6_CLASS_TAIL = (
    "Provide only the sentiment per forex pair in JSON format eg "
    "{'USDJPY': 'positive', 'EURUSD': 'neutral'}. "
    "The sentiment can be positive for buy, negative for sell, or neutral for hold position."
)
_P6_SCORE_TAIL = (
    "Provide the sentiment score per forex pair in JSON format eg "
    "{'USDJPY': -0.4, 'EURUSD': 0.6}. "
    "The sentiment score ranges from -1 to 1. 1 indicates a fully positive/bullish sentiment."
)


def builtin_registry() -> list[PromptTemplate]:
    """All twelve templates: class variants P1-P6 and score variants P1N-P6N."""
    single = Granularity.SINGLE_HEADLINE
    templates = [
        PromptTemplate("P1", _P1_STEM + _CLASS_INSTRUCTION_PLAIN, OutputKind.CLASS_TOKEN, single, 1),
        PromptTemplate("P2", _P2_STEM + _CLASS_INSTRUCTION_PLAIN, OutputKind.CLASS_TOKEN, single, 1),
        PromptTemplate("P3", _P3_STEM + _CLASS_INSTRUCTION_PLAIN, OutputKind.CLASS_TOKEN, single, 1),
        PromptTemplate("P4", _P4_STEM + _CLASS_INSTRUCTION_TRADE + ".", OutputKind.CLASS_TOKEN, single, 1),
        PromptTemplate(
            "P5", _P5_STEM + _CLASS_INSTRUCTION_TRADE, OutputKind.CLASS_TOKEN, Granularity.TICKER_DAY, 1
        ),
        PromptTemplate(
            "P6", _P6_STEM + _P6_CLASS_TAIL, OutputKind.JSON_CLASS_MAP, Granularity.ALL_DAY, 200
        ),
        PromptTemplate("P1N", _P1_STEM + _NUMERIC_INSTRUCTION, OutputKind.NUMERIC_SCORE, single, 10),
        PromptTemplate("P2N", _P2_STEM + _NUMERIC_INSTRUCTION, OutputKind.NUMERIC_SCORE, single, 10),
        PromptTemplate("P3N", _P3_STEM + _NUMERIC_INSTRUCTION, OutputKind.NUMERIC_SCORE, single, 10),
        PromptTemplate("P4N", _P4_STEM + _NUMERIC_INSTRUCTION, OutputKind.NUMERIC_SCORE, single, 10),
        PromptTemplate(
            "P5N", _P5_STEM + _NUMERIC_INSTRUCTION, OutputKind.NUMERIC_SCORE, Granularity.TICKER_DAY, 20
        ),
        PromptTemplate(
            "P6N", _P6_STEM + _P6_SCORE_TAIL, OutputKind.JSON_SCORE_MAP, Granularity.ALL_DAY, 200
        ),
    ]
    return templates


def load_template_overrides(path: str | Path) -> dict[str, dict]:
    """Read a template override file: JSON map id -> {body, kind, granularity, max_tokens, temperature}."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"template override file {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"template override file {path}: expected a JSON object")
    return data


def build_registry(overrides: dict[str, dict] | None = None) -> list[PromptTemplate]:
    """Builtin registry with per-id field overrides applied (new ids are appended)."""
    templates = {t.id: t for t in builtin_registry()}
    for tid, spec in (overrides or {}).items():
        base = templates.get(tid)
        merged = {
            "id": tid,
            "body": spec.get("body", base.body if base else None),
            "kind": OutputKind(spec["kind"]) if "kind" in spec else (base.kind if base else None),
            "granularity": Granularity(spec["granularity"])
            if "granularity" in spec
            else (base.granularity if base else None),
            "max_tokens": spec.get("max_tokens", base.max_tokens if base else None),
            "temperature": spec.get("temperature", base.temperature if base else 0.2),
        }
        if any(v is None for v in merged.values()):
            raise ConfigError(f"template override {tid!r}: new templates must define all fields")
        templates[tid] = PromptTemplate(**merged)
    return list(templates.values())


def registry_by_id(templates: list[PromptTemplate]) -> dict[str, PromptTemplate]:
    return {t.id: t for t in templates}


def lookup_template(templates: list[PromptTemplate], template_id: str) -> PromptTemplate:
    for t in templates:
        if t.id == template_id:
            return t
    raise UnknownTemplate(f"no template with id {template_id!r}")


# --- rendering ----------------------------------------------------------------


@dataclass(frozen=True)
class TickerDayGroup:
    ticker: str
    day: date
    records: tuple[HeadlineRecord, ...]


@dataclass(frozen=True)
class AllDayGroup:
    day: date
    records: tuple[HeadlineRecord, ...]


def _headline_list(records) -> str:
    quoted = ('"' + r.headline.replace('"', '\\"') + '"' for r in records)
    return "[" + ", ".join(quoted) + "]"


def _substitute(body: str, values: dict[str, str]) -> str:
    # single-pass replacement so placeholder-like text inside headlines is never re-expanded
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], body)


def render(template: PromptTemplate, scope_data) -> RenderedPrompt:
    """Render one template against a record, a ticker-day group, or an all-day group."""
    if template.granularity is Granularity.SINGLE_HEADLINE:
        if not isinstance(scope_data, HeadlineRecord):
            raise GranularityMismatch(f"template {template.id} expects a single headline record")
        record = scope_data
        text = _substitute(template.body, {"ticker": record.ticker, "headline": record.headline})
        scope = PromptScope(
            granularity=template.granularity,
            day=record.timestamp.date(),
            record_id=record.id,
            ticker=record.ticker,
            n_headlines=1,
        )
    elif template.granularity is Granularity.TICKER_DAY:
        if not isinstance(scope_data, TickerDayGroup):
            raise GranularityMismatch(f"template {template.id} expects a ticker-day group")
        if not scope_data.records:
            raise EmptyGroup(f"{scope_data.ticker} {scope_data.day}: no headlines to render")
        text = _substitute(
            template.body,
            {"ticker": scope_data.ticker, "ticker_daily_headlines": _headline_list(scope_data.records)},
        )
        scope = PromptScope(
            granularity=template.granularity,
            day=scope_data.day,
            ticker=scope_data.ticker,
            n_headlines=len(scope_data.records),
        )
    elif template.granularity is Granularity.ALL_DAY:
        if not isinstance(scope_data, AllDayGroup):
            raise GranularityMismatch(f"template {template.id} expects an all-day group")
        if not scope_data.records:
            raise EmptyGroup(f"{scope_data.day}: no headlines to render")
        tickers = tuple(sorted({r.ticker for r in scope_data.records}))
        text = _substitute(
            template.body,
            {
                "all_daily_headlines": _headline_list(scope_data.records),
                "tickers": ", ".join(tickers),
            },
        )
        scope = PromptScope(
            granularity=template.granularity,
            day=scope_data.day,
            tickers=tickers,
            n_headlines=len(scope_data.records),
        )
    else:  # pragma: no cover - enum is closed
        raise GranularityMismatch(str(template.granularity))
    return RenderedPrompt(template_id=template.id, text=text, scope=scope, expected_kind=template.kind)


def plan_requests(corpus: Corpus, template: PromptTemplate) -> list[RenderedPrompt]:
    """One request per record, per (ticker, day) group, or per day, depending on granularity."""
    if template.granularity is Granularity.SINGLE_HEADLINE:
        return [render(template, r) for r in corpus.records]
    if template.granularity is Granularity.TICKER_DAY:
        groups = group_by_ticker_day(corpus)
        return [
            render(template, TickerDayGroup(ticker, day, tuple(records)))
            for (ticker, day), records in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ]
    groups = group_by_day(corpus)
    return [
        render(template, AllDayGroup(day, tuple(records)))
        for day, records in sorted(groups.items())
    ]
