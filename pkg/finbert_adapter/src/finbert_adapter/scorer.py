"""Batch sentiment-probability scoring for headline corpora."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

EXPECTED_LABELS = {"positive", "negative", "neutral"}
OUTPUT_FIELDS = ["id", "p_positive", "p_negative", "p_neutral"]


class ModelLoadError(Exception):
    pass


@dataclass(frozen=True)
class RowFailure:
    row: int
    record_id: str
    reason: str


@dataclass
class ScoringResult:
    rows_written: int
    failures: list[RowFailure]


def _read_headlines(corpus_path: Path) -> tuple[list[tuple[int, str, str]], list[RowFailure]]:
    """Pull (row, id, headline) triples out of the corpus CSV.

    Only the ``id`` and ``headline`` columns are consumed; the rest of the
    corpus schema is passed over untouched.
    """
    entries: list[tuple[int, str, str]] = []
    failures: list[RowFailure] = []
    with corpus_path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        fields = set(reader.fieldnames or [])
        if not {"id", "headline"} <= fields:
            raise ModelLoadError(
                f"{corpus_path}: expected 'id' and 'headline' columns, found {sorted(fields)}"
            )
        for row_num, row in enumerate(reader, start=1):
            record_id = (row.get("id") or "").strip()
            headline = (row.get("headline") or "").strip()
            if not record_id:
                failures.append(RowFailure(row_num, "", "missing id"))
                continue
            if not headline:
                failures.append(RowFailure(row_num, record_id, "empty headline"))
                continue
            entries.append((row_num, record_id, headline))
    return entries, failures


def load_classifier(checkpoint: str, device: str = "cpu"):
    """Load tokenizer + sequence classifier and map its labels to output columns."""
    try:
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
    except ImportError as exc:  # pragma: no cover - environment guard
        raise ModelLoadError(f"transformers/torch unavailable: {exc}")
    try:
        tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
    except Exception as exc:
        raise ModelLoadError(f"cannot load checkpoint {checkpoint!r}: {exc}")
    id2label = {int(i): str(lab).lower() for i, lab in model.config.id2label.items()}
    if set(id2label.values()) != EXPECTED_LABELS:
        raise ModelLoadError(
            f"checkpoint labels {sorted(id2label.values())} are not positive/negative/neutral"
        )
    column_index = {label: idx for idx, label in id2label.items()}
    model.to(device)
    model.eval()
    return tokenizer, model, column_index


def score_corpus(
    corpus_path: str | Path,
    output_path: str | Path,
    checkpoint: str,
    batch_size: int = 32,
    device: str = "cpu",
) -> ScoringResult:
    """Score every headline and write ``id,p_positive,p_negative,p_neutral``.

    Inference only; given fixed weights the output is deterministic. Rows that
    cannot be scored are reported, never fatal.
    """
    import torch

    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    corpus_path = Path(corpus_path)
    if not corpus_path.exists():
        raise FileNotFoundError(corpus_path)
    entries, failures = _read_headlines(corpus_path)
    tokenizer, model, column_index = load_classifier(checkpoint, device)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(OUTPUT_FIELDS)
    written = 0
    for start in range(0, len(entries), batch_size):
        batch = entries[start : start + batch_size]
        encoded = tokenizer(
            [headline for _, _, headline in batch],
            return_tensors="pt",
            padding=True,
            truncation=True,
        ).to(device)
        with torch.no_grad():
            probs = model(**encoded).logits.softmax(dim=-1).cpu()
        for (_, record_id, _), row_probs in zip(batch, probs.tolist()):
            writer.writerow(
                [
                    record_id,
                    repr(row_probs[column_index["positive"]]),
                    repr(row_probs[column_index["negative"]]),
                    repr(row_probs[column_index["neutral"]]),
                ]
            )
            written += 1
    Path(output_path).write_text(buffer.getvalue(), encoding="utf-8")
    return ScoringResult(rows_written=written, failures=failures)
