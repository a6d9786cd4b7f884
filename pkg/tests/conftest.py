from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import pytest

from fxsentibench.corpus import Corpus, HeadlineRecord, SentimentLabel

DATA_DIR = Path(__file__).parent / "data"


def make_record(
    record_id: str,
    ticker: str = "EURUSD",
    ts: str = "2023-03-06T09:00:00+00:00",
    headline: str = "ECB seen on hold through summer",
    label: str = "neutral",
    source: str = "unit",
    author: str | None = None,
    url: str | None = None,
    article_text: str | None = None,
) -> HeadlineRecord:
    return HeadlineRecord(
        id=record_id,
        ticker=ticker,
        timestamp=datetime.fromisoformat(ts).astimezone(timezone.utc),
        source=source,
        author=author,
        url=url,
        headline=headline,
        article_text=article_text,
        label=SentimentLabel.from_token(label),
    )


def make_corpus(records, universe=None) -> Corpus:
    records = tuple(sorted(records, key=lambda r: (r.timestamp, r.id)))
    return Corpus(records=records, universe=frozenset(universe or {r.ticker for r in records}))


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
