#!/usr/bin/env python3
"""Regenerate the bundled test fixtures and the golden replay report.

Everything here is deterministic: responses are derived from per-key seeded
RNGs, so reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from fxsentibench.config import load_run_config
from fxsentibench.corpus import load_corpus
from fxsentibench.gateway import Fixture, GenerationParams, prompt_hash
from fxsentibench.pipeline import run_pipeline
from fxsentibench.prompts import Granularity, OutputKind, builtin_registry, plan_requests
from fxsentibench.reporting import write_run_outputs

DATA = REPO / "tests" / "data"

CORPUS_ROWS = [
    # id, ticker, timestamp, source, author, url, headline, label
    ("h01", "EURUSD", "2023-03-06T07:58:00+00:00", "forexlive", "A. Trader", "https://fx.example/h01",
     "EURUSD edges higher as ECB hawks circle", "positive"),
    ("h02", "EURUSD", "2023-03-06T11:40:00+00:00", "fxstreet", "", "",
     "Euro area retail sales disappoint in January", "negative"),
    ("h03", "GBPUSD", "2023-03-06T09:05:00+00:00", "forexlive", "", "https://fx.example/h03",
     "GBP/USD holds above key support after PMI beat", "positive"),
    ("h04", "USDJPY", "2023-03-06T02:31:00+00:00", "fxstreet", "K. Sato", "",
     "BoJ’s Ueda: Appropriate to continue monetary easing to achieve 2% inflation target", "positive"),
    ("h05", "AUDUSD", "2023-03-06T04:12:00+00:00", "forexlive", "", "",
     "RBA seen pausing after soft wage data", "negative"),
    ("h06", "EURCHF", "2023-03-06T13:22:00+00:00", "fxstreet", "", "",
     "SNB's Jordan says inflation fight not over", "negative"),
    ("h07", "GBPUSD", "2023-03-06T16:45:00+00:00", "forexlive", "", "",
     "Diminishing bets for a move to 12400", "neutral"),
    ("h08", "EURUSD", "2023-03-07T00:02:00+00:00", "fxstreet", "", "",
     "eur-usd consolidates near 1.0680 ahead of Powell", "neutral"),
    ("h09", "USDJPY", "2023-03-07T08:30:00+00:00", "forexlive", "", "",
     "Dollar rebounds despite US data. Yen gains amid lower yields", "neutral"),
    ("h10", "GBPUSD", "2023-03-07T10:14:00+00:00", "forexlive", "", "",
     "No reasons to dislike Cable in the very near term", "positive"),
    ("h11", "AUDUSD", "2023-03-07T05:45:00+00:00", "fxstreet", "", "",
     "AUD USD slides as iron ore tumbles", "negative"),
    ("h12", "EURCHF", "2023-03-07T14:02:00+00:00", "forexlive", "", "",
     "EURCHF grinds lower after Swiss CPI surprise", "negative"),
    ("h13", "EURUSD", "2023-03-07T18:30:00+00:00", "fxstreet", "M. Ruiz", "",
     'Lagarde: "rate path will be data dependent", traders unmoved', "neutral"),
    ("h14", "USDJPY", "2023-03-08T01:15:00+00:00", "fxstreet", "", "",
     "USDJPY to reach 124 by Q4 as BoJ shift looms", "negative"),
    ("h15", "EURUSD", "2023-03-08T09:41:00+00:00", "forexlive", "", "",
     "German factory orders jump, lifting the single currency", "positive"),
    ("h16", "GBPUSD", "2023-03-08T12:12:00+00:00", "fxstreet", "", "",
     "UK housing market cools at fastest pace since 2009", "negative"),
    ("h17", "AUDUSD", "2023-03-08T03:28:00+00:00", "forexlive", "", "",
     "China trade data buoys commodity currencies", "positive"),
    ("h18", "EURCHF", "2023-03-08T10:55:00+00:00", "fxstreet", "", "",
     "Franc bid persists on safe-haven demand", "negative"),
    ("h19", "USDJPY", "2023-03-08T23:58:00+00:00", "forexlive", "", "",
     "Treasury yields climb into the close, dollar firm", "positive"),
    ("h20", "EURUSD", "2023-03-09T06:20:00+00:00", "fxstreet", "", "",
     "ECB's Lane flags persistent core inflation", "positive"),
    ("h21", "GBPUSD", "2023-03-09T08:02:00+00:00", "forexlive", "", "",
     "gbpusd slips under 1.19 as gilt yields fall", "negative"),
    ("h22", "AUDUSD", "2023-03-09T02:17:00+00:00", "fxstreet", "", "",
     "Aussie jobs blowout revives RBA hike bets", "positive"),
    ("h23", "USDJPY", "2023-03-09T13:47:00+00:00", "forexlive", "", "",
     "MoF jawboning caps dollar-yen advance", "neutral"),
    ("h24", "EURCHF", "2023-03-09T08:08:00+00:00", "fxstreet", "", "",
     "EUR/CHF steady as markets await SNB guidance", "neutral"),
]

# date, open, high, low, close ; EURCHF deliberately misses 2023-03-08
MARKET_BARS = {
    "AUDUSD": [
        ("2023-03-03", 0.6770, 0.6790, 0.6720, 0.6772),
        ("2023-03-06", 0.6772, 0.6800, 0.6730, 0.6738),
        ("2023-03-07", 0.6738, 0.6750, 0.6580, 0.6591),
        ("2023-03-08", 0.6591, 0.6640, 0.6567, 0.6628),
        ("2023-03-09", 0.6628, 0.6670, 0.6590, 0.6660),
    ],
    "EURCHF": [
        ("2023-03-03", 0.9970, 1.0005, 0.9940, 0.9988),
        ("2023-03-06", 0.9988, 1.0010, 0.9950, 0.9961),
        ("2023-03-07", 0.9961, 0.9980, 0.9900, 0.9912),
        ("2023-03-09", 0.9912, 0.9960, 0.9890, 0.9943),
    ],
    "EURUSD": [
        ("2023-03-03", 1.0595, 1.0640, 1.0560, 1.0634),
        ("2023-03-06", 1.0634, 1.0690, 1.0610, 1.0681),
        ("2023-03-07", 1.0681, 1.0700, 1.0540, 1.0549),
        ("2023-03-08", 1.0549, 1.0580, 1.0520, 1.0546),
        ("2023-03-09", 1.0546, 1.0600, 1.0530, 1.0582),
    ],
    "GBPUSD": [
        ("2023-03-03", 1.1950, 1.2040, 1.1920, 1.2036),
        ("2023-03-06", 1.2036, 1.2070, 1.1980, 1.2024),
        ("2023-03-07", 1.2024, 1.2030, 1.1820, 1.1828),
        ("2023-03-08", 1.1828, 1.1880, 1.1800, 1.1843),
        ("2023-03-09", 1.1843, 1.1930, 1.1830, 1.1921),
    ],
    "USDJPY": [
        ("2023-03-03", 136.30, 136.90, 135.70, 135.86),
        ("2023-03-06", 135.86, 136.20, 135.40, 135.94),
        ("2023-03-07", 135.94, 137.90, 135.80, 137.16),
        ("2023-03-08", 137.16, 137.50, 136.80, 137.25),
        ("2023-03-09", 137.25, 137.30, 135.90, 136.13),
    ],
}

TOKENS = {1: "positive", 0: "neutral", -1: "negative"}


def write_corpus() -> Path:
    path = DATA / "corpus_24.csv"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["id", "ticker", "timestamp", "source", "author", "url", "headline", "article_text", "label"]
    )
    for rid, ticker, ts, source, author, url, headline, label in CORPUS_ROWS:
        writer.writerow([rid, ticker, ts, source, author, url, headline, "", label])
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def write_market() -> Path:
    market_dir = DATA / "market"
    market_dir.mkdir(parents=True, exist_ok=True)
    for ticker, bars in MARKET_BARS.items():
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["date", "open", "high", "low", "close"])
        writer.writerows(bars)
        (market_dir / f"{ticker}.csv").write_text(buffer.getvalue(), encoding="utf-8")
    return market_dir


def write_probabilities() -> Path:
    path = DATA / "probabilities.csv"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "p_positive", "p_negative", "p_neutral"])
    truth = {rid: label for rid, *_, label in CORPUS_ROWS}
    slots = {"positive": 0, "negative": 1, "neutral": 2}
    for rid, *_ in CORPUS_ROWS:
        digest = hashlib.sha256(rid.encode()).digest()
        weights = [1 + digest[0], 1 + digest[1], 1 + digest[2]]
        weights[slots[truth[rid]]] += 160  # classifier leans toward the annotation
        total = sum(weights)
        writer.writerow([rid] + [repr(w / total) for w in weights])
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def predicted_code(template_id: str, key: str, truth_code: int) -> int:
    rng = random.Random(f"{template_id}:{key}")
    roll = rng.random()
    if roll < 0.72:
        return truth_code
    if roll < 0.88:
        return 0 if truth_code != 0 else rng.choice([-1, 1])
    return -truth_code if truth_code != 0 else rng.choice([-1, 1])


def predicted_score(template_id: str, key: str, truth_code: int) -> float:
    rng = random.Random(f"{template_id}:{key}:score")
    code = predicted_code(template_id, key, truth_code)
    if code == 0:
        return round(rng.uniform(-0.1, 0.1), 2)
    return round(code * rng.uniform(0.3, 0.9), 2)


CLASS_FORMATS = ["{tok}", "{Tok}.", '"{tok}"', "{tok}", "{Tok}"]
SCORE_FORMATS = ["[{v}]", "Sentiment: [{v}]", "{v}", "[{v}]"]


def class_response(template_id: str, index: int, key: str, truth_code: int) -> str:
    # a couple of deliberately awkward replies to exercise the parser taxonomy
    if template_id == "P2" and key == "h09":
        return "It is hard to say without more context."
    if template_id == "P1" and key == "h17":
        return "positive momentum building for the aussie"
    tok = TOKENS[predicted_code(template_id, key, truth_code)]
    fmt = CLASS_FORMATS[index % len(CLASS_FORMATS)]
    return fmt.format(tok=tok, Tok=tok.capitalize())


def score_response(template_id: str, index: int, key: str, truth_code: int) -> str:
    if template_id == "P3N" and key == "h16":
        return "[1.2]"
    value = predicted_score(template_id, key, truth_code)
    fmt = SCORE_FORMATS[index % len(SCORE_FORMATS)]
    return fmt.format(v=value)


def json_map_response(template_id: str, day_iso: str, entries: dict[str, str]) -> str:
    if template_id == "P6":
        if day_iso == "2023-03-07":
            body = ", ".join(f'"{t}": "{v}"' for t, v in entries.items())
            return "Here is the summary: {" + body + "}"
        body = ", ".join(f"'{t}': '{v}'" for t, v in entries.items())
        return "{" + body + "}"
    if day_iso == "2023-03-09":
        body = ", ".join(f"'{t}': {v}" for t, v in entries.items())
        return "Sure! {" + body + "} Hope this helps."
    body = ", ".join(f"'{t}': {v}" for t, v in entries.items())
    return "{" + body + "}"


def build_fixture(corpus) -> Fixture:
    fixture = Fixture()
    truth_by_id = {r.id: int(r.label) for r in corpus.records}
    for template in builtin_registry():
        params = GenerationParams("gpt-3.5-turbo", template.max_tokens, template.temperature)
        prompts = plan_requests(corpus, template)
        for index, prompt in enumerate(prompts):
            scope = prompt.scope
            if template.granularity is Granularity.SINGLE_HEADLINE:
                key = scope.record_id
                truth = truth_by_id[key]
                if template.kind is OutputKind.CLASS_TOKEN:
                    response = class_response(template.id, index, key, truth)
                else:
                    response = score_response(template.id, index, key, truth)
            elif template.granularity is Granularity.TICKER_DAY:
                key = f"{scope.ticker}:{scope.day.isoformat()}"
                group_truth = [
                    int(r.label)
                    for r in corpus.records
                    if r.ticker == scope.ticker and r.timestamp.date() == scope.day
                ]
                majority = max(sorted(set(group_truth)), key=group_truth.count)
                if template.kind is OutputKind.CLASS_TOKEN:
                    response = TOKENS[predicted_code(template.id, key, majority)]
                else:
                    response = f"[{predicted_score(template.id, key, majority)}]"
            else:
                day_iso = scope.day.isoformat()
                entries = {}
                for ticker in scope.tickers:
                    if template.id == "P6" and day_iso == "2023-03-08" and ticker == "EURCHF":
                        continue  # missing-ticker path
                    group_truth = [
                        int(r.label)
                        for r in corpus.records
                        if r.ticker == ticker and r.timestamp.date() == scope.day
                    ]
                    majority = max(sorted(set(group_truth)), key=group_truth.count)
                    key = f"{ticker}:{day_iso}"
                    if template.kind is OutputKind.JSON_CLASS_MAP:
                        entries[ticker] = TOKENS[predicted_code(template.id, key, majority)]
                    else:
                        entries[ticker] = repr(predicted_score(template.id, key, majority))
                response = json_map_response(template.id, day_iso, entries)
            fixture.put(
                prompt_hash(prompt.text, params),
                response,
                prompt_tokens=int(len(prompt.text.split()) * 1.3),
                completion_tokens=max(1, len(response.split())),
            )
    return fixture


def write_config() -> Path:
    path = DATA / "run_config.json"
    path.write_text(
        """{
  "corpus_path": "corpus_24.csv",
  "market_data_dir": "market",
  "output_dir": "out",
  "probabilities_path": "probabilities.csv",
  "backend": {
    "type": "replay",
    "fixture_path": "replay_fixture.json",
    "model_name": "gpt-3.5-turbo"
  },
  "parallelism": 1,
  "price_per_1k": 0.002,
  "zero_policy": "exclude",
  "join_policy": "drop",
  "return_mode": "close_to_close",
  "projected_daily_articles": 5000,
  "require_deterministic": true
}
""",
        encoding="utf-8",
    )
    return path


def write_golden(config_path: Path) -> Path:
    config = load_run_config(config_path)
    report, manifest = run_pipeline(config)
    golden_dir = DATA / "golden"
    if golden_dir.exists():
        shutil.rmtree(golden_dir)
    write_run_outputs(report, manifest, golden_dir, figures=False)
    # the manifest carries timestamps by design; it is not part of the golden bytes
    (golden_dir / "manifest.json").unlink()
    return golden_dir


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    corpus_path = write_corpus()
    print(f"wrote {corpus_path}")
    print(f"wrote {write_market()}")
    print(f"wrote {write_probabilities()}")
    corpus = load_corpus(corpus_path)
    assert len(corpus) == 24, len(corpus)
    fixture = build_fixture(corpus)
    fixture_path = DATA / "replay_fixture.json"
    fixture.save(fixture_path)
    print(f"wrote {fixture_path} ({len(fixture.entries)} entries)")
    config_path = write_config()
    print(f"wrote {config_path}")
    print(f"wrote {write_golden(config_path)}")


if __name__ == "__main__":
    main()
