from __future__ import annotations

import csv
import io
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> Path:
    """A miniature randomly-initialized classifier with the expected label set."""
    import torch
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

    directory = tmp_path_factory.mktemp("tiny_checkpoint")
    vocab = directory / "vocab.txt"
    vocab.write_text(
        "\n".join(
            ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
             "the", "euro", "pound", "yen", "rises", "falls", "steady", "on", "data"]
        ),
        encoding="utf-8",
    )
    tokenizer = BertTokenizer(str(vocab))
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=3,
        id2label={0: "positive", 1: "negative", 2: "neutral"},
        label2id={"positive": 0, "negative": 1, "neutral": 2},
    )
    torch.manual_seed(20230306)
    model = BertForSequenceClassification(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def shuffled_label_checkpoint(tmp_path_factory, tiny_checkpoint) -> Path:
    """Same architecture but with a permuted id2label, to test column mapping."""
    import torch
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

    directory = tmp_path_factory.mktemp("shuffled_checkpoint")
    tokenizer = BertTokenizer(str(tiny_checkpoint / "vocab.txt"))
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=3,
        id2label={0: "Neutral", 1: "Positive", 2: "Negative"},
        label2id={"Neutral": 0, "Positive": 1, "Negative": 2},
    )
    torch.manual_seed(20230306)
    model = BertForSequenceClassification(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


def write_corpus_csv(path: Path, rows: list[tuple[str, str]]) -> Path:
    """Rows of (id, headline) in the full corpus schema."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["id", "ticker", "timestamp", "source", "author", "url", "headline", "article_text", "label"]
    )
    for record_id, headline in rows:
        writer.writerow(
            [record_id, "EURUSD", "2023-03-06T09:00:00+00:00", "t", "", "", headline, "", "neutral"]
        )
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path
