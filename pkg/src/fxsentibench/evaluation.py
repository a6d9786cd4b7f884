"""Classification, market-alignment, and cost metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .corpus import Corpus, SentimentLabel, filter_without_pair_mention
from .errors import (
    DegenerateSeries,
    EmptyInput,
    EmptySeries,
    IndexMismatch,
    LengthMismatch,
    UnknownRecordId,
)
from .gateway import ChatExchange
from .signals import JoinedSeries

LABEL_ORDER = (SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL, SentimentLabel.POSITIVE)
_LABEL_INDEX = {label: i for i, label in enumerate(LABEL_ORDER)}


class ZeroPolicy(Enum):
    """How zero-sentiment days count toward directional accuracy."""

    EXCLUDE = "exclude"
    COUNT_WRONG = "count_wrong"
    COUNT_HALF = "count_half"


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts indexed (true, predicted) in label order neg/neu/pos."""

    counts: tuple[tuple[int, int, int], ...]
    unscored: int = 0

    @property
    def total_scored(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass(frozen=True)
class PerClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    s_mae: float
    per_class: dict[SentimentLabel, PerClassMetrics]
    confusion: ConfusionMatrix
    n_scored: int
    unscored: int


@dataclass(frozen=True)
class DirectionalAccuracy:
    value: float
    per_ticker: dict[str, float]
    n_days: int
    n_counted: int
    zero_sentiment_days: int
    zero_policy: ZeroPolicy


@dataclass(frozen=True)
class MarketMetrics:
    pearson_r: float | None
    directional_accuracy: float
    per_ticker_da: dict[str, float]
    n_days: int
    zero_policy: ZeroPolicy


@dataclass(frozen=True)
class CostReport:
    total_prompt_tokens: int
    total_completion_tokens: int
    mean_time_per_prompt: float
    mean_time_per_headline: float
    mean_tokens_per_prompt: float
    mean_tokens_per_headline: float
    estimated_cost: float
    price_per_1k_tokens: float
    n_prompts: int
    n_headlines: int


def s_mae(preds: list[int], truths: list[int]) -> float:
    """Mean absolute difference between integer-coded labels (-1/0/+1)."""
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    if not preds:
        raise EmptyInput("cannot compute s_mae on empty input")
    for v in list(preds) + list(truths):
        if v not in (-1, 0, 1):
            raise ValueError(f"label codes must be in {{-1, 0, 1}}, got {v}")
    return math.fsum(abs(y - p) for y, p in zip(truths, preds)) / len(preds)


def confusion_from_predictions(
    preds: dict[str, SentimentLabel | None], truths: Corpus
) -> ConfusionMatrix:
    by_id = truths.by_id()
    counts = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    unscored = 0
    for record_id, predicted in preds.items():
        record = by_id.get(record_id)
        if record is None:
            raise UnknownRecordId(f"prediction for unknown record id {record_id!r}")
        if predicted is None:
            unscored += 1
            continue
        counts[_LABEL_INDEX[record.label]][_LABEL_INDEX[predicted]] += 1
    return ConfusionMatrix(counts=tuple(tuple(row) for row in counts), unscored=unscored)


def metrics_from_confusion(
    cm: ConfusionMatrix, s_mae_value: float, average: str = "weighted"
) -> ClassificationMetrics:
    """Precision/recall/F1 and accuracy from raw counts.

    With ``weighted`` (support-proportional) averaging, recall is computed as
    sum(tp)/N, which is algebraically identical to the support-weighted
    average of per-class recalls and makes the recall == accuracy identity
    exact in floating point. ``macro`` averages the three classes unweighted.
    """
    if average not in ("weighted", "macro"):
        raise ValueError(f"average must be weighted or macro, got {average!r}")
    n = cm.total_scored
    if n == 0:
        raise EmptyInput("confusion matrix has no scored predictions")
    per_class: dict[SentimentLabel, PerClassMetrics] = {}
    weighted_precision_terms = []
    weighted_f1_terms = []
    tp_total = 0
    for label in LABEL_ORDER:
        i = _LABEL_INDEX[label]
        tp = cm.counts[i][i]
        support = sum(cm.counts[i])
        predicted = sum(cm.counts[r][i] for r in range(3))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class[label] = PerClassMetrics(precision, recall, f1, support)
        weighted_precision_terms.append(support * precision)
        weighted_f1_terms.append(support * f1)
        tp_total += tp
    accuracy = tp_total / n
    if average == "macro":
        precision = math.fsum(pc.precision for pc in per_class.values()) / 3
        recall = math.fsum(pc.recall for pc in per_class.values()) / 3
        f1 = math.fsum(pc.f1 for pc in per_class.values()) / 3
    else:
        precision = math.fsum(weighted_precision_terms) / n
        recall = tp_total / n
        f1 = math.fsum(weighted_f1_terms) / n
    return ClassificationMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        s_mae=s_mae_value,
        per_class=per_class,
        confusion=cm,
        n_scored=n,
        unscored=cm.unscored,
    )


def classification_metrics(
    preds: dict[str, SentimentLabel | None], truths: Corpus, average: str = "weighted"
) -> ClassificationMetrics:
    """Averaged metrics over scored records; parse failures counted as unscored."""
    cm = confusion_from_predictions(preds, truths)
    if cm.total_scored == 0:
        raise EmptyInput("no scored predictions")
    by_id = truths.by_id()
    pred_codes = []
    truth_codes = []
    for record_id, predicted in preds.items():
        if predicted is None:
            continue
        pred_codes.append(int(predicted))
        truth_codes.append(int(by_id[record_id].label))
    return metrics_from_confusion(cm, s_mae(pred_codes, truth_codes), average=average)


def filtered_evaluation(
    corpus: Corpus, preds_per_model: dict[str, dict[str, SentimentLabel | None]]
) -> dict[str, ClassificationMetrics | None]:
    """Re-run classification metrics on the no-pair-mention subset (Table-6 style)."""
    subset = filter_without_pair_mention(corpus)
    subset_ids = {r.id for r in subset.records}
    out: dict[str, ClassificationMetrics | None] = {}
    for model_id, preds in preds_per_model.items():
        subset_preds = {rid: label for rid, label in preds.items() if rid in subset_ids}
        try:
            out[model_id] = classification_metrics(subset_preds, subset)
        except EmptyInput:
            out[model_id] = None
    return out


# --- correlation -----------------------------------------------------------------


def pearson(x: list[float], y: list[float]) -> float:
    """Product-moment correlation with exactly-rounded summation."""
    if len(x) != len(y):
        raise LengthMismatch(f"series lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise DegenerateSeries("need at least 2 points")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    cov = math.fsum((a - mean_x) * (b - mean_y) for a, b in zip(x, y))
    var_x = math.fsum((a - mean_x) ** 2 for a in x)
    var_y = math.fsum((b - mean_y) ** 2 for b in y)
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateSeries("a series has zero variance")
    r = cov / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def correlation_matrix(named_series: dict[str, list[float]]) -> tuple[list[str], list[list[float]]]:
    """Symmetric unit-diagonal Pearson matrix over pre-aligned series."""
    labels = list(named_series)
    lengths = {len(s) for s in named_series.values()}
    if len(lengths) > 1:
        raise IndexMismatch(f"series lengths differ: {sorted(lengths)}")
    k = len(labels)
    matrix = [[1.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            r = pearson(named_series[labels[i]], named_series[labels[j]])
            matrix[i][j] = r
            matrix[j][i] = r
    return labels, matrix


# --- directional accuracy ----------------------------------------------------------


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def directional_accuracy(
    joined: JoinedSeries, zero_policy: ZeroPolicy = ZeroPolicy.EXCLUDE
) -> DirectionalAccuracy:
    """Fraction of days where the sentiment direction matches the return direction.

    Zero-sentiment days score per policy: excluded from the denominator,
    counted as wrong, or counted as half right. Zero returns never match a
    nonzero sentiment.
    """
    if not joined.rows:
        raise EmptySeries("joined series is empty")
    total_credit = 0.0
    total_counted = 0
    zero_days = 0
    per_ticker_credit: dict[str, float] = {}
    per_ticker_counted: dict[str, int] = {}
    for row in joined.rows:
        s = _sign(row.sentiment)
        if s == 0:
            zero_days += 1
            if zero_policy is ZeroPolicy.EXCLUDE:
                continue
            credit = 0.5 if zero_policy is ZeroPolicy.COUNT_HALF else 0.0
        else:
            credit = 1.0 if s == _sign(row.ret) and _sign(row.ret) != 0 else 0.0
        total_credit += credit
        total_counted += 1
        per_ticker_credit[row.ticker] = per_ticker_credit.get(row.ticker, 0.0) + credit
        per_ticker_counted[row.ticker] = per_ticker_counted.get(row.ticker, 0) + 1
    per_ticker = {
        ticker: per_ticker_credit[ticker] / per_ticker_counted[ticker]
        for ticker in sorted(per_ticker_counted)
    }
    value = total_credit / total_counted if total_counted else 0.0
    return DirectionalAccuracy(
        value=value,
        per_ticker=per_ticker,
        n_days=len(joined.rows),
        n_counted=total_counted,
        zero_sentiment_days=zero_days,
        zero_policy=zero_policy,
    )


# --- cost -----------------------------------------------------------------------


def cost_report(
    exchanges: list[ChatExchange],
    headline_counts: list[int],
    price_per_1k: float = 0.002,
) -> CostReport:
    """Token/latency/cost accounting; list prompts amortize over their group size."""
    if len(exchanges) != len(headline_counts):
        raise LengthMismatch(f"{len(exchanges)} exchanges vs {len(headline_counts)} headline counts")
    n_prompts = len(exchanges)
    if n_prompts == 0:
        return CostReport(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0, price_per_1k, 0, 0)
    total_prompt = sum(e.prompt_tokens for e in exchanges)
    total_completion = sum(e.completion_tokens for e in exchanges)
    total_tokens = total_prompt + total_completion
    total_time = math.fsum(e.latency_s for e in exchanges)
    n_headlines = sum(headline_counts)
    return CostReport(
        total_prompt_tokens=total_prompt,
        total_completion_tokens=total_completion,
        mean_time_per_prompt=total_time / n_prompts,
        mean_time_per_headline=total_time / n_headlines if n_headlines else 0.0,
        mean_tokens_per_prompt=total_tokens / n_prompts,
        mean_tokens_per_headline=total_tokens / n_headlines if n_headlines else 0.0,
        estimated_cost=total_tokens / 1000.0 * price_per_1k,
        price_per_1k_tokens=price_per_1k,
        n_prompts=n_prompts,
        n_headlines=n_headlines,
    )


def project_daily_cost(tokens_per_article: float, articles_per_day: int, price_per_1k: float) -> float:
    """Projected daily spend for a given article volume at a flat token price."""
    return tokens_per_article * articles_per_day / 1000.0 * price_per_1k
