"""Per-(ticker, day) sentiment signals and their join with market returns."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

from .corpus import SentimentLabel
from .errors import (
    InvalidDistribution,
    MixedModels,
    NonPositivePrice,
    SchemaError,
    UnmatchedDays,
)

PROB_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SentimentObservation:
    """One parsed sentiment value bound to a model, ticker and UTC date.

    ``n_headlines`` carries the group size for ticker-day / all-day prompts so
    daily aggregation can report headline coverage; single-headline
    observations leave it at 1.
    """

    model_id: str
    ticker: str
    day: date
    value: float
    record_id: str | None = None
    n_headlines: int = 1

    def __post_init__(self):
        if not -1.0 <= self.value <= 1.0:
            raise ValueError(f"observation value {self.value} outside [-1, 1]")
        if self.n_headlines < 1:
            raise ValueError("n_headlines must be >= 1")


@dataclass(frozen=True)
class DailySentiment:
    model_id: str
    ticker: str
    day: date
    score: float
    n_headlines: int


@dataclass(frozen=True)
class DailyReturn:
    ticker: str
    day: date
    ret: float


@dataclass(frozen=True)
class JoinedRow:
    ticker: str
    day: date
    sentiment: float
    ret: float


@dataclass(frozen=True)
class JoinedSeries:
    model_id: str
    rows: tuple[JoinedRow, ...]
    dropped_days: tuple[tuple[str, date], ...] = ()


def _check_distribution(p_pos: float, p_neg: float, p_neu: float) -> None:
    probs = (p_pos, p_neg, p_neu)
    if any(not math.isfinite(p) or p < 0 for p in probs):
        raise InvalidDistribution(f"probabilities must be finite and >= 0, got {probs}")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_SUM_TOLERANCE:
        raise InvalidDistribution(f"probabilities sum to {total}, expected 1")


def finbert_score(p_pos: float, p_neg: float, p_neu: float) -> float:
    """Sentiment score from class probabilities: positive minus negative."""
    _check_distribution(p_pos, p_neg, p_neu)
    return p_pos - p_neg


def finbert_class(p_pos: float, p_neg: float, p_neu: float) -> SentimentLabel:
    """Argmax class; any exact tie at the maximum resolves to Neutral (hold)."""
    _check_distribution(p_pos, p_neg, p_neu)
    best = max(p_pos, p_neg, p_neu)
    tied = [
        label
        for label, p in (
            (SentimentLabel.POSITIVE, p_pos),
            (SentimentLabel.NEGATIVE, p_neg),
            (SentimentLabel.NEUTRAL, p_neu),
        )
        if p == best
    ]
    if len(tied) == 1:
        return tied[0]
    if SentimentLabel.NEUTRAL in tied:
        return SentimentLabel.NEUTRAL
    # polar standoff (positive == negative): no direction, hold
    if SentimentLabel.POSITIVE in tied and SentimentLabel.NEGATIVE in tied:
        return SentimentLabel.NEUTRAL
    return SentimentLabel.POSITIVE  # pragma: no cover - unreachable with 3 labels


def observation_from_label(
    model_id: str, ticker: str, day: date, label: SentimentLabel, record_id: str | None = None,
    n_headlines: int = 1,
) -> SentimentObservation:
    return SentimentObservation(
        model_id=model_id,
        ticker=ticker,
        day=day,
        value=float(int(label)),
        record_id=record_id,
        n_headlines=n_headlines,
    )


def aggregate_daily(observations: list[SentimentObservation]) -> list[DailySentiment]:
    """Sum observation values into one row per (ticker, day).

    Uses exactly-rounded summation, so the result is independent of
    observation order.
    """
    if not observations:
        return []
    model_ids = {o.model_id for o in observations}
    if len(model_ids) > 1:
        raise MixedModels(f"observations span models {sorted(model_ids)}")
    buckets: dict[tuple[str, date], list[SentimentObservation]] = {}
    for obs in observations:
        buckets.setdefault((obs.ticker, obs.day), []).append(obs)
    rows = []
    for (ticker, day), group in sorted(buckets.items()):
        rows.append(
            DailySentiment(
                model_id=next(iter(model_ids)),
                ticker=ticker,
                day=day,
                score=math.fsum(o.value for o in group),
                n_headlines=sum(o.n_headlines for o in group),
            )
        )
    return rows


# --- market data ---------------------------------------------------------------


def compute_return(open_price: float, close_price: float) -> float:
    """Fractional return close/open - 1; pass the prior close as ``open_price``
    for the close-to-close convention."""
    if open_price <= 0 or close_price <= 0:
        raise NonPositivePrice(f"prices must be positive, got open={open_price} close={close_price}")
    return close_price / open_price - 1.0


def load_market(
    path: str | Path,
    ticker: str | None = None,
    mode: str = "close_to_close",
) -> list[DailyReturn]:
    """Load one per-ticker OHLC CSV (``date,open,high,low,close``) into daily returns.

    ``close_to_close`` drops the first bar (no prior close); ``open_to_close``
    uses each bar's own open.
    """
    if mode not in ("close_to_close", "open_to_close"):
        raise ValueError(f"unknown return mode {mode!r}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    symbol = ticker or path.stem.upper()
    bars: list[tuple[date, float, float]] = []
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"date", "open", "close"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(0, ",".join(sorted(missing)), "missing market data columns")
        for row_num, row in enumerate(reader, start=1):
            try:
                day = datetime.strptime(row["date"].strip(), "%Y-%m-%d").date()
            except ValueError:
                raise SchemaError(row_num, "date", f"expected YYYY-MM-DD, got {row['date']!r}")
            try:
                open_price = float(row["open"])
                close_price = float(row["close"])
            except (TypeError, ValueError):
                raise SchemaError(row_num, "open/close", "prices must be numbers")
            bars.append((day, open_price, close_price))
    bars.sort(key=lambda b: b[0])
    if len({b[0] for b in bars}) != len(bars):
        raise SchemaError(0, "date", f"duplicate dates in {path.name}")
    returns = []
    if mode == "open_to_close":
        for day, open_price, close_price in bars:
            returns.append(DailyReturn(symbol, day, compute_return(open_price, close_price)))
    else:
        for prev, cur in zip(bars, bars[1:]):
            returns.append(DailyReturn(symbol, cur[0], compute_return(prev[2], cur[2])))
    return returns


def load_market_dir(
    directory: str | Path,
    universe: frozenset[str] | set[str],
    mode: str = "close_to_close",
) -> list[DailyReturn]:
    """Load every ``<TICKER>.csv`` in a directory whose name is in the universe."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(directory)
    returns: list[DailyReturn] = []
    for path in sorted(directory.glob("*.csv")):
        if path.stem.upper() in universe:
            returns.extend(load_market(path, mode=mode))
    return returns


def join_sentiment_returns(
    daily: list[DailySentiment],
    returns: list[DailyReturn],
    policy: str = "drop",
) -> JoinedSeries:
    """Inner-join daily sentiment with returns on (ticker, date).

    Sentiment days without a matching return (weekends, holidays) are dropped
    and reported under ``drop`` policy, or raise under ``error`` policy.
    """
    if policy not in ("drop", "error"):
        raise ValueError(f"unknown join policy {policy!r}")
    model_ids = {d.model_id for d in daily}
    if len(model_ids) > 1:
        raise MixedModels(f"daily sentiment spans models {sorted(model_ids)}")
    by_key = {(r.ticker, r.day): r.ret for r in returns}
    rows: list[JoinedRow] = []
    dropped: list[tuple[str, date]] = []
    for d in sorted(daily, key=lambda d: (d.ticker, d.day)):
        ret = by_key.get((d.ticker, d.day))
        if ret is None:
            dropped.append((d.ticker, d.day))
        else:
            rows.append(JoinedRow(d.ticker, d.day, d.score, ret))
    if dropped and policy == "error":
        raise UnmatchedDays(f"{len(dropped)} sentiment days without market returns: {dropped[:5]}")
    model_id = next(iter(model_ids)) if model_ids else ""
    return JoinedSeries(model_id=model_id, rows=tuple(rows), dropped_days=tuple(dropped))


# --- probabilities file (secondary-component contract) ---------------------------


def load_probabilities(path: str | Path, strict: bool = True) -> dict[str, tuple[float, float, float]]:
    """Load the classifier probabilities CSV ``id,p_positive,p_negative,p_neutral``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    out: dict[str, tuple[float, float, float]] = {}
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"id", "p_positive", "p_negative", "p_neutral"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(0, ",".join(sorted(missing)), "missing probability columns")
        for row_num, row in enumerate(reader, start=1):
            try:
                record_id = row["id"].strip()
                probs = (
                    float(row["p_positive"]),
                    float(row["p_negative"]),
                    float(row["p_neutral"]),
                )
                _check_distribution(*probs)
            except (TypeError, ValueError, InvalidDistribution) as exc:
                if strict:
                    raise SchemaError(row_num, "probabilities", str(exc))
                continue
            if record_id in out:
                raise SchemaError(row_num, "id", f"duplicate id {record_id!r}")
            out[record_id] = probs
    return out
