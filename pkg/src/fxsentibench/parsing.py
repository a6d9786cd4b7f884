"""Turn raw model text into typed sentiment values for all four output kinds."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Mapping

from .corpus import SentimentLabel
from .errors import (
    MalformedJson,
    MissingTicker,
    NoJsonFound,
    OutOfRange,
    ResponseParseError,
    Unparseable,
)
from .prompts import OutputKind

_STRIP_CHARS = " \t\r\n.,!:;\"'"
_ALLOWED_TOKENS = {"positive": SentimentLabel.POSITIVE, "negative": SentimentLabel.NEGATIVE, "neutral": SentimentLabel.NEUTRAL}

_BRACKETED_NUMBER_RE = re.compile(r"\[\s*([+-]?(?:\d+\.?\d*|\.\d+))\s*\]")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)")


@dataclass(frozen=True)
class ParsedSentiment:
    """A parsed response value: a class label and/or a score in [-1, 1]."""

    class_label: SentimentLabel | None = None
    score: float | None = None
    lenient: bool = False

    def __post_init__(self):
        if self.class_label is None and self.score is None:
            raise ValueError("parsed sentiment needs a class label or a score")
        if self.score is not None and not -1.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [-1, 1]")

    @property
    def value(self) -> float:
        """Market-evaluation value: the score, or the integer code of the class."""
        return self.score if self.score is not None else float(int(self.class_label))


def match_class_token(text: str) -> tuple[SentimentLabel, bool]:
    """Return (label, lenient) where lenient means the token led a longer reply."""
    normalized = text.strip(_STRIP_CHARS).casefold()
    if normalized in _ALLOWED_TOKENS:
        return _ALLOWED_TOKENS[normalized], False
    first = normalized.split()[0].strip(_STRIP_CHARS) if normalized.split() else ""
    if first in _ALLOWED_TOKENS:
        return _ALLOWED_TOKENS[first], True
    raise Unparseable(text)


def parse_class(text: str) -> SentimentLabel:
    """Parse a single class token (positive | negative | neutral)."""
    label, _ = match_class_token(text)
    return label


def parse_numeric(text: str, clamp: bool = False) -> float:
    """Extract the first decimal number, preferring a bracketed "[x]" form."""
    match = _BRACKETED_NUMBER_RE.search(text) or _NUMBER_RE.search(text)
    if match is None:
        raise Unparseable(text)
    value = float(match.group(1) if match.re is _BRACKETED_NUMBER_RE else match.group(0))
    if not -1.0 <= value <= 1.0:
        if clamp:
            return max(-1.0, min(1.0, value))
        raise OutOfRange(value)
    return value


def find_json_block(text: str) -> str | None:
    """Locate the first balanced {...} block, honoring quoted strings."""
    start = text.find("{")
    while start != -1:
        depth = 0
        quote: str | None = None
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if quote is not None:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == quote:
                    quote = None
                continue
            if ch in "'\"":
                quote = ch
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        start = text.find("{", start + 1)
    return None


_SINGLE_QUOTED_RE = re.compile(r"'([^'\\]*(?:\\.[^'\\]*)*)'")


def _loads_relaxed(block: str):
    try:
        return json.loads(block)
    except json.JSONDecodeError:
        pass
    # the P6 prompt itself teaches single-quoted pseudo-JSON
    rewritten = _SINGLE_QUOTED_RE.sub(lambda m: json.dumps(m.group(1)), block)
    try:
        return json.loads(rewritten)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"unparseable JSON block: {exc}")


@dataclass(frozen=True)
class JsonMapParse:
    values: Mapping[str, ParsedSentiment]
    extra_tickers: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


def parse_json_map(
    text: str,
    expected_tickers: frozenset[str] | set[str],
    kind: OutputKind,
) -> JsonMapParse:
    """Parse a per-ticker JSON map response (class or score values)."""
    if kind not in (OutputKind.JSON_CLASS_MAP, OutputKind.JSON_SCORE_MAP):
        raise ValueError(f"kind must be a JSON map kind, got {kind}")
    expected = {t.upper() for t in expected_tickers}
    block = find_json_block(text)
    if block is None:
        raise NoJsonFound(f"no JSON object in response: {text[:120]!r}")
    data = _loads_relaxed(block)
    if not isinstance(data, dict):
        raise MalformedJson("JSON block is not an object")

    values: dict[str, ParsedSentiment] = {}
    extras: list[str] = []
    warnings: list[str] = []
    for raw_key, raw_value in data.items():
        key = str(raw_key).strip().upper()
        target = key if key in expected else None
        if target is None:
            extras.append(key)
            continue
        try:
            if kind is OutputKind.JSON_CLASS_MAP:
                if not isinstance(raw_value, str):
                    raise Unparseable(str(raw_value))
                label, lenient = match_class_token(raw_value)
                values[target] = ParsedSentiment(class_label=label, lenient=lenient)
            else:
                if isinstance(raw_value, bool) or not isinstance(raw_value, (int, float, str)):
                    raise Unparseable(str(raw_value))
                score = (
                    float(raw_value)
                    if isinstance(raw_value, (int, float))
                    else parse_numeric(raw_value)
                )
                if not -1.0 <= score <= 1.0:
                    raise OutOfRange(score)
                values[target] = ParsedSentiment(score=score)
        except ResponseParseError as exc:
            warnings.append(f"{target}: {exc}")
    missing = expected - values.keys()
    if missing:
        raise MissingTicker(frozenset(missing), partial=values)
    if extras:
        warnings.extend(f"unexpected ticker {t}" for t in extras)
    return JsonMapParse(values=values, extra_tickers=tuple(extras), warnings=tuple(warnings))


@dataclass(frozen=True)
class ParseOutcome:
    """Total outcome of parsing one response: a value XOR a taxonomy error."""

    value: ParsedSentiment | None = None
    by_ticker: Mapping[str, ParsedSentiment] | None = None
    error: ResponseParseError | None = None
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.error is None


def parse_response(
    text: str,
    kind: OutputKind,
    expected_tickers: frozenset[str] | set[str] = frozenset(),
) -> ParseOutcome:
    """Totality wrapper: every input maps to exactly one value or taxonomy error."""
    try:
        if kind is OutputKind.CLASS_TOKEN:
            label, lenient = match_class_token(text)
            return ParseOutcome(value=ParsedSentiment(class_label=label, lenient=lenient))
        if kind is OutputKind.NUMERIC_SCORE:
            return ParseOutcome(value=ParsedSentiment(score=parse_numeric(text)))
        result = parse_json_map(text, expected_tickers, kind)
        return ParseOutcome(by_ticker=result.values, warnings=result.warnings)
    except ResponseParseError as exc:
        return ParseOutcome(error=exc)
