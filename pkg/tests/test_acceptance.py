"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

from __future__ import annotations

import itertools
import os
import random
import string
import time
from datetime import date
from decimal import Decimal, getcontext
from fractions import Fraction
from pathlib import Path

import pytest

from fxsentibench.cli import main as cli_main
from fxsentibench.corpus import SentimentLabel, load_corpus, token_stats
from fxsentibench.errors import ResponseParseError
from fxsentibench.evaluation import (
    ConfusionMatrix,
    ZeroPolicy,
    directional_accuracy,
    metrics_from_confusion,
    pearson,
    project_daily_cost,
    s_mae,
)
from fxsentibench.parsing import parse_numeric, parse_response
from fxsentibench.prompts import OutputKind
from fxsentibench.signals import (
    JoinedRow,
    JoinedSeries,
    SentimentObservation,
    aggregate_daily,
    load_probabilities,
)

DATA = Path(__file__).parent / "data"


def report_line(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {status}: {name}{suffix}")


def check(name: str, ok: bool, detail: str = "") -> None:
    report_line(name, ok, detail)
    assert ok, f"{name}: {detail}"


# --- Eq.-oracle: sentiment MAE -------------------------------------------------------


def test_s_mae_oracle():
    rng = random.Random(42)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(1, 60)
        preds = [rng.choice([-1, 0, 1]) for _ in range(n)]
        truths = [rng.choice([-1, 0, 1]) for _ in range(n)]
        # brute-force per-element loop
        total = 0
        for y, p in zip(truths, preds):
            total += abs(y - p)
        expected = total / n
        worst = max(worst, abs(s_mae(preds, truths) - expected))
    # boundary fixtures
    zero = s_mae([1, 0, -1], [1, 0, -1])
    two = s_mae([-1] * 5, [1] * 5)
    elapsed = time.perf_counter() - start
    check(
        "s_mae matches brute force on 1000 random vectors to 1e-12",
        worst <= 1e-12 and zero == 0.0 and two == 2.0 and elapsed < 1.0,
        f"max err {worst:.2e}, bounds ({zero}, {two}), {elapsed:.2f}s",
    )


# --- weighted-metric identity -----------------------------------------------------------


def brute_force_metrics(counts):
    n = sum(sum(row) for row in counts)
    per = []
    for i in range(3):
        tp = counts[i][i]
        support = sum(counts[i])
        predicted = sum(counts[r][i] for r in range(3))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per.append((precision, recall, f1, support))
    accuracy = sum(counts[i][i] for i in range(3)) / n
    w_precision = sum(p * s for p, _, _, s in per) / n
    w_recall = sum(r * s for _, r, _, s in per) / n
    w_f1 = sum(f * s for _, _, f, s in per) / n
    return accuracy, w_precision, w_recall, w_f1


def test_weighted_metric_identity():
    rng = random.Random(7)
    exact_identity = True
    worst = 0.0
    trials = 0
    while trials < 1000:
        counts = tuple(tuple(rng.randint(0, 40) for _ in range(3)) for _ in range(3))
        if sum(map(sum, counts)) == 0:
            continue
        trials += 1
        metrics = metrics_from_confusion(ConfusionMatrix(counts=counts), 0.0)
        accuracy, w_precision, w_recall, w_f1 = brute_force_metrics(counts)
        exact_identity &= metrics.recall == metrics.accuracy
        worst = max(
            worst,
            abs(metrics.accuracy - accuracy),
            abs(metrics.precision - w_precision),
            abs(metrics.recall - w_recall),
            abs(metrics.f1 - w_f1),
        )
    check(
        "weighted recall == accuracy exactly and metrics match brute force to 1e-12",
        exact_identity and worst <= 1e-12,
        f"identity {exact_identity}, max err {worst:.2e}",
    )


# --- pearson oracle ---------------------------------------------------------------------


def reference_pearson(x, y):
    getcontext().prec = 50
    n = len(x)
    fx = [Fraction(v) for v in x]
    fy = [Fraction(v) for v in y]
    mx = sum(fx, Fraction(0)) / n
    my = sum(fy, Fraction(0)) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(fx, fy))
    vx = sum((a - mx) ** 2 for a in fx)
    vy = sum((b - my) ** 2 for b in fy)
    num = Decimal(cov.numerator) / Decimal(cov.denominator)
    den = (
        (Decimal(vx.numerator) / Decimal(vx.denominator))
        * (Decimal(vy.numerator) / Decimal(vy.denominator))
    ).sqrt()
    return float(num / den)


def test_pearson_oracle():
    rng = random.Random(11)
    worst = 0.0
    for _ in range(100):
        n = rng.randint(3, 80)
        x = [rng.uniform(-10, 10) for _ in range(n)]
        y = [rng.uniform(-10, 10) for _ in range(n)]
        worst = max(worst, abs(pearson(x, y) - reference_pearson(x, y)))
    x = [rng.uniform(-1, 1) for _ in range(30)]
    y = [rng.uniform(-1, 1) for _ in range(30)]
    identity_ok = pearson(x, x) == 1.0 and pearson(x, [-v for v in x]) == -1.0
    invariance = 0.0
    base = pearson(x, y)
    for a, b in [(3.7, -2.0), (-0.004, 11.0), (250.0, 0.0)]:
        got = pearson([a * v + b for v in x], y)
        expected = base if a > 0 else -base
        invariance = max(invariance, abs(got - expected))
    check(
        "pearson matches high-precision reference to 1e-12 with exact +/-1 and invariance",
        worst <= 1e-12 and identity_ok and invariance <= 1e-12,
        f"max err {worst:.2e}, invariance err {invariance:.2e}",
    )


# --- directional accuracy constants ---------------------------------------------------------


def oracle_da(pairs, policy: str):
    credit = 0.0
    counted = 0
    for s, r in pairs:
        s_sign = (s > 0) - (s < 0)
        r_sign = (r > 0) - (r < 0)
        if s_sign == 0:
            if policy == "exclude":
                continue
            counted += 1
            credit += 0.5 if policy == "count_half" else 0.0
        else:
            counted += 1
            credit += 1.0 if (s_sign == r_sign and r_sign != 0) else 0.0
    return credit / counted if counted else 0.0


def series_from(pairs):
    rows = tuple(JoinedRow("EURUSD", date(2023, 3, 6), s, r) for s, r in pairs)
    return JoinedSeries(model_id="m", rows=rows)


def test_directional_accuracy_constants():
    start = time.perf_counter()
    worked = directional_accuracy(series_from([(1.0, 0.01)] * 65 + [(1.0, -0.01)] * 35))
    exact_65 = worked.value == 0.65

    mismatches = 0
    total = 0
    return_patterns = {
        4: [(0.01, -0.01, 0.01, -0.01), (0.01, 0.01, 0.0, -0.01)],
    }
    for n in range(1, 9):
        returns = [0.01 if i % 2 == 0 else -0.01 for i in range(n)]
        for sentiment in itertools.product((-1.0, 0.0, 1.0), repeat=n):
            pairs = list(zip(sentiment, returns))
            if all(s == 0 for s in sentiment):
                continue  # fully-zero series has an empty exclude denominator
            total += 1
            series = series_from(pairs)
            for policy, enum in (("exclude", ZeroPolicy.EXCLUDE), ("count_wrong", ZeroPolicy.COUNT_WRONG)):
                if policy == "exclude" and all(s == 0 for s in sentiment):
                    continue
                got = directional_accuracy(series, enum).value
                if got != oracle_da(pairs, policy):
                    mismatches += 1
    # joint enumeration including zero returns at length 4
    for rets in return_patterns[4]:
        for sentiment in itertools.product((-1.0, 0.0, 1.0), repeat=4):
            if all(s == 0 for s in sentiment):
                continue
            pairs = list(zip(sentiment, rets))
            series = series_from(pairs)
            for policy, enum in (("exclude", ZeroPolicy.EXCLUDE), ("count_wrong", ZeroPolicy.COUNT_WRONG)):
                got = directional_accuracy(series, enum).value
                if got != oracle_da(pairs, policy):
                    mismatches += 1
    elapsed = time.perf_counter() - start
    check(
        "worked 65/100 example gives exactly 0.65; policies match enumeration oracle",
        exact_65 and mismatches == 0 and elapsed < 1.0,
        f"{total} patterns, {mismatches} mismatches, {elapsed:.2f}s",
    )


# --- cost constant -----------------------------------------------------------------------------


def test_cost_constant():
    cost = project_daily_cost(600, 5000, 0.002)
    check(
        "600 tokens x 5000 articles at 0.002 USD/1K projects to 6.00 USD/day",
        abs(cost - 6.00) <= 0.005,
        f"got {cost}",
    )


# --- parser totality fuzz -----------------------------------------------------------------------


def random_response(rng: random.Random) -> str:
    kind = rng.randrange(7)
    if kind == 0:
        return "".join(rng.choice(string.printable) for _ in range(rng.randint(0, 60)))
    if kind == 1:
        alphabet = "{}[]'\",:.-0123456789 abcdefEURUSDJPY\\\n\t\x00é中"
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
    if kind == 2:
        token = rng.choice(["positive", "negative", "neutral", "bullish", "maybe"])
        wrapper = rng.choice(["{t}", "{t}.", "The answer is {t}", "{t}!!", " {t} ", "«{t}»"])
        return wrapper.format(t=token)
    if kind == 3:
        value = rng.uniform(-3, 3)
        wrapper = rng.choice(["[{v}]", "{v}", "score: [{v}]", "[{v}] maybe", "[[{v}]]"])
        return wrapper.format(v=round(value, 3))
    if kind == 4:
        entries = ", ".join(
            f"'{rng.choice(['EURUSD', 'USDJPY', 'XAUUSD', 'x'])}': "
            + rng.choice(["'positive'", "'junk'", "0.4", "9", "[1]", "null"])
            for _ in range(rng.randint(0, 4))
        )
        return rng.choice(["{", "here: {", ""]) + entries + rng.choice(["}", ""])
    if kind == 5:
        base = '{"EURUSD": "positive", "USDJPY": -0.2}'
        cut = rng.randint(0, len(base))
        return base[:cut] + base[cut + rng.randint(0, 3):]
    return rng.choice(["", " ", "\n", "{}", "[]", "null", "{'':''}"])


def test_parser_totality_fuzz():
    rng = random.Random(2023)
    kinds = list(OutputKind)
    crashes = 0
    not_total = 0
    n = 100_000
    start = time.perf_counter()
    for i in range(n):
        text = random_response(rng)
        kind = kinds[i % len(kinds)]
        try:
            outcome = parse_response(text, kind, {"EURUSD", "USDJPY"})
        except Exception:
            crashes += 1
            continue
        has_value = outcome.value is not None or outcome.by_ticker is not None
        if has_value == (outcome.error is not None):
            not_total += 1
        if outcome.error is not None and not isinstance(outcome.error, ResponseParseError):
            not_total += 1
    elapsed = time.perf_counter() - start

    # embedded-known-value extraction over templated wrappers
    misses = 0
    wrappers = ["[{v}]", "Sentiment: [{v}]", "I'd say [{v}] overall", "score = [{v}]!"]
    planted = 0
    for i in range(2000):
        value = round(rng.uniform(-1, 1), 2)
        text = wrappers[i % len(wrappers)].format(v=value)
        planted += 1
        if parse_numeric(text) != value:
            misses += 1
    for token, label in (("positive", SentimentLabel.POSITIVE), ("negative", SentimentLabel.NEGATIVE), ("neutral", SentimentLabel.NEUTRAL)):
        for wrapper in ("{t}", "{t}.", '"{t}"', "{t} outlook ahead"):
            planted += 1
            outcome = parse_response(wrapper.format(t=token), OutputKind.CLASS_TOKEN)
            if outcome.value is None or outcome.value.class_label is not label:
                misses += 1
    check(
        "100k fuzzed responses all map to exactly one outcome; planted values recovered 100%",
        crashes == 0 and not_total == 0 and misses == 0,
        f"{n} inputs in {elapsed:.1f}s, {crashes} crashes, {not_total} non-total, {misses}/{planted} misses",
    )


# --- end-to-end replay determinism ------------------------------------------------------------------


GOLDEN_FILES = [
    "report.json",
    "report.txt",
    "tables/classification.csv",
    "tables/classification_filtered.csv",
    "tables/best_model_per_pair.csv",
    "tables/da_class_models.csv",
    "tables/da_numeric_models.csv",
    "tables/da_per_ticker.csv",
    "tables/cost.csv",
    "tables/correlation_matrix.csv",
]


def run_bundled(tmp_path: Path, out_name: str, parallelism: int, figures: bool) -> Path:
    out_dir = tmp_path / out_name
    argv = [
        "run",
        "--config",
        str(DATA / "run_config.json"),
        "--output",
        str(out_dir),
        "--parallelism",
        str(parallelism),
    ]
    if not figures:
        argv.append("--no-figures")
    code = cli_main(argv)
    assert code == 0
    return out_dir


def test_end_to_end_replay_determinism(tmp_path):
    start = time.perf_counter()
    runs = [run_bundled(tmp_path, f"run{i}", 1, figures=(i == 0)) for i in range(3)]
    runs.append(run_bundled(tmp_path, "run_p8", 8, figures=True))
    mismatched = []
    golden = DATA / "golden"
    for rel in GOLDEN_FILES:
        expected = (golden / rel).read_bytes()
        for run_dir in runs:
            if (run_dir / rel).read_bytes() != expected:
                mismatched.append(f"{run_dir.name}/{rel}")
    # figures are compared across runs (same matplotlib), not against the golden
    for name in ("correlation_matrix.png", "directional_accuracy.png"):
        first = (runs[0] / "figures" / name).read_bytes()
        if (runs[3] / "figures" / name).read_bytes() != first:
            mismatched.append(f"figures/{name}")
    elapsed = time.perf_counter() - start
    check(
        "replay runs byte-identical to golden across 3 runs and parallelism {1,8}",
        not mismatched and elapsed < 10.0,
        f"{len(runs)} runs in {elapsed:.1f}s" + (f"; mismatched: {mismatched}" if mismatched else ""),
    )


# --- aggregation property ---------------------------------------------------------------------------


def test_aggregation_permutation_and_additivity():
    rng = random.Random(77)
    tickers = ["AUDUSD", "EURUSD", "GBPUSD"]
    days = [date(2023, 3, d) for d in range(6, 10)]
    observations = [
        SentimentObservation(
            model_id="m",
            ticker=rng.choice(tickers),
            day=rng.choice(days),
            value=rng.uniform(-1, 1),
        )
        for _ in range(120)
    ]
    baseline = aggregate_daily(observations)
    failures = 0
    for _ in range(1000):
        shuffled = observations[:]
        rng.shuffle(shuffled)
        if aggregate_daily(shuffled) != baseline:
            failures += 1
    # additivity over disjoint random partitions
    for _ in range(50):
        left, right = [], []
        for obs in observations:
            (left if rng.random() < 0.5 else right).append(obs)
        combined = {}
        for part in (left, right):
            for row in aggregate_daily(part):
                key = (row.ticker, row.day)
                if key in combined:
                    prev = combined[key]
                    combined[key] = (prev[0] + row.score, prev[1] + row.n_headlines)
                else:
                    combined[key] = (row.score, row.n_headlines)
        for row in baseline:
            got_score, got_n = combined[(row.ticker, row.day)]
            if abs(got_score - row.score) > 1e-12 or got_n != row.n_headlines:
                failures += 1
    check(
        "aggregate_daily permutation-invariant over 1000 shuffles and additive",
        failures == 0,
        f"{failures} failures",
    )


# --- bundled probabilities fixture honors the adapter contract ----------------------------------------


def test_probabilities_fixture_contract():
    corpus = load_corpus(DATA / "corpus_24.csv")
    probs = load_probabilities(DATA / "probabilities.csv")
    ids = {r.id for r in corpus.records}
    bijective = set(probs) == ids and len(probs) == len(corpus)
    simplex = all(abs(sum(p) - 1.0) <= 1e-6 and all(0 <= v <= 1 for v in p) for p in probs.values())
    check(
        "checked-in probabilities fixture is bijective with corpus ids on the simplex",
        bijective and simplex,
    )


# --- optional: the published dataset ----------------------------------------------------------------


PUBLISHED = os.environ.get("FXSENTIBENCH_DATASET")


@pytest.mark.skipif(not PUBLISHED, reason="set FXSENTIBENCH_DATASET to the published corpus file")
def test_published_dataset_counts_and_token_stats():
    corpus = load_corpus(PUBLISHED)
    stats = token_stats(corpus, "headline")
    ok_count = len(corpus) == 2291
    ok_mean = abs(stats.mean - 11.69) <= 0.15 * 11.69
    ok_std = abs(stats.std_dev - 2.82) <= 0.15 * 2.82
    check(
        "published dataset: 2291 records and headline token stats within 15%",
        ok_count and ok_mean and ok_std,
        f"n={len(corpus)}, mean={stats.mean:.2f}, std={stats.std_dev:.2f}",
    )
