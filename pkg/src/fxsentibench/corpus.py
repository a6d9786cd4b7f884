"""Annotated forex headline corpus: loading, validation, filtering, grouping, token stats."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import IntEnum
from pathlib import Path
from typing import Callable, Iterator

from .errors import EmptySelection, SchemaError, UnknownTicker, UnknownTokenizer

DEFAULT_UNIVERSE = frozenset({"AUDUSD", "EURCHF", "EURUSD", "GBPUSD", "USDJPY"})

CSV_FIELDS = [
    "id",
    "ticker",
    "timestamp",
    "source",
    "author",
    "url",
    "headline",
    "article_text",
    "label",
]

_TICKER_RE = re.compile(r"^[A-Z]{6}$")


class SentimentLabel(IntEnum):
    """Directional short-term view of a headline; integer codes -1/0/+1."""

    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1

    @property
    def token(self) -> str:
        return self.name.lower()

    @classmethod
    def from_token(cls, token: str) -> "SentimentLabel":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown sentiment label {token!r}") from None


@dataclass(frozen=True)
class HeadlineRecord:
    id: str
    ticker: str
    timestamp: datetime  # always UTC
    source: str
    author: str | None
    url: str | None
    headline: str
    article_text: str | None
    label: SentimentLabel


@dataclass(frozen=True)
class RowIssue:
    """One rejected input row, kept for diagnostics."""

    row: int
    field: str
    reason: str


@dataclass(frozen=True)
class TokenStats:
    mean: float
    std_dev: float
    count: int


@dataclass(frozen=True)
class Corpus:
    records: tuple[HeadlineRecord, ...]
    universe: frozenset[str]
    skipped: tuple[RowIssue, ...] = ()

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("corpus record ids must be unique")
        stamps = [r.timestamp for r in self.records]
        if any(a > b for a, b in zip(stamps, stamps[1:])):
            raise ValueError("corpus records must be sorted by timestamp")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[HeadlineRecord]:
        return iter(self.records)

    def by_id(self) -> dict[str, HeadlineRecord]:
        return {r.id: r for r in self.records}


def _parse_timestamp(raw: str, row: int) -> datetime:
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise SchemaError(row, "timestamp", f"not ISO-8601: {raw!r}")
    if stamp.tzinfo is None:
        raise SchemaError(row, "timestamp", "missing UTC offset")
    return stamp.astimezone(timezone.utc)


def _optional(value) -> str | None:
    if value is None:
        return None
    value = str(value)
    return value if value.strip() else None


def _parse_row(raw: dict, row: int, universe: frozenset[str]) -> HeadlineRecord:
    for name in ("id", "ticker", "timestamp", "source", "headline", "label"):
        if raw.get(name) is None or not str(raw[name]).strip():
            raise SchemaError(row, name, "missing or empty")
    ticker = str(raw["ticker"]).strip()
    if not _TICKER_RE.match(ticker):
        raise SchemaError(row, "ticker", f"not a 6-letter symbol: {ticker!r}")
    if ticker not in universe:
        raise UnknownTicker(row, ticker)
    headline = str(raw["headline"]).strip()
    label_token = str(raw["label"]).strip()
    if label_token.lower() not in ("positive", "neutral", "negative"):
        raise SchemaError(row, "label", f"expected positive|neutral|negative, got {label_token!r}")
    return HeadlineRecord(
        id=str(raw["id"]).strip(),
        ticker=ticker,
        timestamp=_parse_timestamp(str(raw["timestamp"]), row),
        source=str(raw["source"]).strip(),
        author=_optional(raw.get("author")),
        url=_optional(raw.get("url")),
        headline=headline,
        article_text=_optional(raw.get("article_text")),
        label=SentimentLabel.from_token(label_token),
    )


def _iter_rows(path: Path):
    """Yield (row_number, raw_dict) pairs; row numbers are 1-based data rows."""
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        with path.open(encoding="utf-8") as handle:
            for row, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    yield row, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(row, "-", f"invalid JSON line: {exc}")
    else:
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = [f for f in CSV_FIELDS if f not in (reader.fieldnames or [])]
            if missing:
                raise SchemaError(0, ",".join(missing), "missing header columns")
            for row, raw in enumerate(reader, start=1):
                yield row, raw


def load_corpus(
    path: str | Path,
    universe: frozenset[str] | set[str] = DEFAULT_UNIVERSE,
    strict: bool = False,
) -> Corpus:
    """Load a headline corpus from CSV or JSON-lines.

    Invalid rows are skipped and reported on ``Corpus.skipped`` by default;
    ``strict=True`` aborts on the first bad row instead.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    universe = frozenset(universe)
    records: list[HeadlineRecord] = []
    seen: dict[str, int] = {}
    issues: list[RowIssue] = []
    for row, raw in _iter_rows(path):
        try:
            record = _parse_row(raw, row, universe)
            if record.id in seen:
                raise SchemaError(row, "id", f"duplicate id {record.id!r} (first at row {seen[record.id]})")
            seen[record.id] = row
            records.append(record)
        except UnknownTicker as exc:
            if strict:
                raise
            issues.append(RowIssue(exc.row, "ticker", str(exc)))
        except SchemaError as exc:
            if strict:
                raise
            issues.append(RowIssue(exc.row, exc.field, exc.reason))
    records.sort(key=lambda r: (r.timestamp, r.id))
    return Corpus(records=tuple(records), universe=universe, skipped=tuple(issues))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out; load(save(c)) round-trips to an identical corpus."""
    path = Path(path)
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        with path.open("w", encoding="utf-8") as handle:
            for r in corpus.records:
                handle.write(json.dumps(_record_dict(r), ensure_ascii=False) + "\n")
    else:
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
            writer.writeheader()
            for r in corpus.records:
                writer.writerow({k: v if v is not None else "" for k, v in _record_dict(r).items()})


def _record_dict(r: HeadlineRecord) -> dict:
    return {
        "id": r.id,
        "ticker": r.ticker,
        "timestamp": r.timestamp.isoformat(),
        "source": r.source,
        "author": r.author,
        "url": r.url,
        "headline": r.headline,
        "article_text": r.article_text,
        "label": r.label.token,
    }


# --- pair-mention filtering -------------------------------------------------

def _mention_pattern(ticker: str) -> re.Pattern:
    base, quote = ticker[:3], ticker[3:]
    # matches EURUSD, EUR/USD, EUR-USD and "EUR USD", case-insensitive
    return re.compile(
        rf"(?<![A-Za-z]){re.escape(base)}[ /\-]?{re.escape(quote)}(?![A-Za-z])",
        re.IGNORECASE,
    )


def mentions_pair(headline: str, ticker: str) -> bool:
    return _mention_pattern(ticker).search(headline) is not None


def filter_without_pair_mention(corpus: Corpus) -> Corpus:
    """Keep only records whose headline does not mention their own forex pair."""
    kept = tuple(r for r in corpus.records if not mentions_pair(r.headline, r.ticker))
    return Corpus(records=kept, universe=corpus.universe)


# --- grouping ----------------------------------------------------------------

def _day_of(record: HeadlineRecord, offset: timedelta) -> date:
    return (record.timestamp + offset).date()


def group_by_ticker_day(
    corpus: Corpus, offset: timedelta = timedelta(0)
) -> dict[tuple[str, date], list[HeadlineRecord]]:
    groups: dict[tuple[str, date], list[HeadlineRecord]] = {}
    for r in corpus.records:
        groups.setdefault((r.ticker, _day_of(r, offset)), []).append(r)
    return groups


def group_by_day(corpus: Corpus, offset: timedelta = timedelta(0)) -> dict[date, list[HeadlineRecord]]:
    groups: dict[date, list[HeadlineRecord]] = {}
    for r in corpus.records:
        groups.setdefault(_day_of(r, offset), []).append(r)
    return groups


# --- tokenizers ----------------------------------------------------------------

TokenCounter = Callable[[str], int]


def whitespace_token_count(text: str) -> int:
    return len(text.split())


class VocabTokenizer:
    """Greedy longest-match subword counter over a fixed vocabulary.

    Approximates BPE-style token counts without the merge machinery; unknown
    characters count as one token each.
    """

    def __init__(self, vocab: set[str]):
        if not vocab:
            raise ValueError("vocabulary must be nonempty")
        self.vocab = frozenset(vocab)
        self.max_len = max(len(tok) for tok in vocab)

    @classmethod
    def from_file(cls, path: str | Path) -> "VocabTokenizer":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".json":
            data = json.loads(text)
            vocab = set(data if isinstance(data, list) else data.keys())
        else:
            vocab = {line.rstrip("\n") for line in text.splitlines() if line.strip()}
        return cls(vocab)

    def __call__(self, text: str) -> int:
        count = 0
        i = 0
        n = len(text)
        while i < n:
            step = 1
            for width in range(min(self.max_len, n - i), 0, -1):
                if text[i : i + width] in self.vocab:
                    step = width
                    break
            count += 1
            i += step
        return count


_TOKENIZERS: dict[str, TokenCounter] = {"whitespace": whitespace_token_count}


def register_tokenizer(name: str, counter: TokenCounter) -> None:
    _TOKENIZERS[name] = counter


def get_tokenizer(name: str) -> TokenCounter:
    try:
        return _TOKENIZERS[name]
    except KeyError:
        raise UnknownTokenizer(f"no tokenizer registered under {name!r}") from None


def token_stats(corpus: Corpus, field: str = "headline", tokenizer: TokenCounter | None = None) -> TokenStats:
    """Mean and population std-dev of token counts over records carrying ``field``."""
    if field not in ("headline", "article"):
        raise ValueError("field must be 'headline' or 'article'")
    counter = tokenizer or whitespace_token_count
    texts = [
        r.headline if field == "headline" else r.article_text
        for r in corpus.records
        if (field == "headline") or (r.article_text is not None)
    ]
    if not texts:
        raise EmptySelection(f"no record has field {field!r}")
    counts = [counter(t) for t in texts]
    n = len(counts)
    mean = math.fsum(counts) / n
    variance = math.fsum((c - mean) ** 2 for c in counts) / n
    return TokenStats(mean=mean, std_dev=math.sqrt(variance), count=n)
