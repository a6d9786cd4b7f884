from __future__ import annotations

import csv
import math
from pathlib import Path

import pytest

from conftest import write_corpus_csv
from finbert_adapter.cli import main as cli_main
from finbert_adapter.scorer import ModelLoadError, score_corpus

THREE_ROWS = [
    ("h1", "the euro rises on data"),
    ("h2", "the pound falls"),
    ("h3", "the yen steady"),
]


def read_rows(path: Path) -> list[dict]:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def test_three_headlines_three_simplex_rows(tmp_path, tiny_checkpoint):
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    out = tmp_path / "probs.csv"
    result = score_corpus(corpus, out, checkpoint=str(tiny_checkpoint), batch_size=2)
    assert result.rows_written == 3
    assert result.failures == []
    rows = read_rows(out)
    assert [r["id"] for r in rows] == ["h1", "h2", "h3"]
    for row in rows:
        probs = [float(row[k]) for k in ("p_positive", "p_negative", "p_neutral")]
        assert all(0.0 <= p <= 1.0 for p in probs)
        assert math.isclose(sum(probs), 1.0, abs_tol=1e-6)


def test_ids_bijective_with_corpus(tmp_path, tiny_checkpoint):
    rows = [(f"r{i:02d}", f"the euro rises on data {i % 3}") for i in range(11)]
    corpus = write_corpus_csv(tmp_path / "corpus.csv", rows)
    out = tmp_path / "probs.csv"
    score_corpus(corpus, out, checkpoint=str(tiny_checkpoint), batch_size=4)
    written = [r["id"] for r in read_rows(out)]
    assert written == [rid for rid, _ in rows]
    assert len(set(written)) == len(written)


def test_duplicate_headline_identical_probabilities(tmp_path, tiny_checkpoint):
    corpus = write_corpus_csv(
        tmp_path / "corpus.csv",
        [("a", "the euro rises"), ("b", "the pound falls"), ("c", "the euro rises")],
    )
    out = tmp_path / "probs.csv"
    score_corpus(corpus, out, checkpoint=str(tiny_checkpoint), batch_size=3)
    rows = {r["id"]: (r["p_positive"], r["p_negative"], r["p_neutral"]) for r in read_rows(out)}
    assert rows["a"] == rows["c"]
    assert rows["a"] != rows["b"]


def test_deterministic_across_runs_and_batch_sizes(tmp_path, tiny_checkpoint):
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    out1, out2, out3 = (tmp_path / f"p{i}.csv" for i in range(3))
    score_corpus(corpus, out1, checkpoint=str(tiny_checkpoint), batch_size=1)
    score_corpus(corpus, out2, checkpoint=str(tiny_checkpoint), batch_size=1)
    score_corpus(corpus, out3, checkpoint=str(tiny_checkpoint), batch_size=2)
    assert out1.read_bytes() == out2.read_bytes()
    assert [r["id"] for r in read_rows(out3)] == [r["id"] for r in read_rows(out1)]


def test_label_order_taken_from_checkpoint_config(tmp_path, tiny_checkpoint, shuffled_label_checkpoint):
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    out_plain = tmp_path / "plain.csv"
    out_shuffled = tmp_path / "shuffled.csv"
    score_corpus(corpus, out_plain, checkpoint=str(tiny_checkpoint))
    score_corpus(corpus, out_shuffled, checkpoint=str(shuffled_label_checkpoint))
    plain = read_rows(out_plain)
    shuffled = read_rows(out_shuffled)
    # identical seed and weights: logits match, only the label naming differs,
    # so the named columns must line up after remapping
    for a, b in zip(plain, shuffled):
        assert a["p_positive"] == b["p_neutral"]
        assert a["p_negative"] == b["p_positive"]
        assert a["p_neutral"] == b["p_negative"]


def test_row_failures_reported_not_fatal(tmp_path, tiny_checkpoint):
    corpus = write_corpus_csv(
        tmp_path / "corpus.csv", [("ok1", "the euro rises"), ("bad", "   "), ("ok2", "the yen steady")]
    )
    out = tmp_path / "probs.csv"
    result = score_corpus(corpus, out, checkpoint=str(tiny_checkpoint))
    assert result.rows_written == 2
    assert len(result.failures) == 1
    assert result.failures[0].record_id == "bad"
    assert [r["id"] for r in read_rows(out)] == ["ok1", "ok2"]


def test_model_load_error(tmp_path):
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    with pytest.raises(ModelLoadError):
        score_corpus(corpus, tmp_path / "p.csv", checkpoint=str(tmp_path / "missing"))


def test_missing_columns_rejected(tmp_path, tiny_checkpoint):
    path = tmp_path / "bad.csv"
    path.write_text("text,sentiment\nhello,1\n", encoding="utf-8")
    with pytest.raises(ModelLoadError):
        score_corpus(path, tmp_path / "p.csv", checkpoint=str(tiny_checkpoint))


def test_output_loads_through_primary_loader(tmp_path, tiny_checkpoint):
    fxsentibench = pytest.importorskip("fxsentibench")
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    out = tmp_path / "probs.csv"
    score_corpus(corpus, out, checkpoint=str(tiny_checkpoint))
    probs = fxsentibench.load_probabilities(out)
    assert set(probs) == {"h1", "h2", "h3"}
    for p_pos, p_neg, p_neu in probs.values():
        assert math.isclose(p_pos + p_neg + p_neu, 1.0, abs_tol=1e-6)


def test_cli_end_to_end(tmp_path, tiny_checkpoint, capsys):
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    out = tmp_path / "probs.csv"
    code = cli_main(
        [
            "--input", str(corpus),
            "--output", str(out),
            "--checkpoint", str(tiny_checkpoint),
            "--batch-size", "2",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "wrote 3 rows" in captured.out
    assert out.exists()


def test_cli_bad_checkpoint_exit_code(tmp_path, capsys):
    corpus = write_corpus_csv(tmp_path / "corpus.csv", THREE_ROWS)
    code = cli_main(
        ["--input", str(corpus), "--output", str(tmp_path / "p.csv"), "--checkpoint", "/nope"]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err
