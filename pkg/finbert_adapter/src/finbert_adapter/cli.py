"""CLI wrapper around the batch scorer."""

from __future__ import annotations

import argparse
import sys

from .scorer import ModelLoadError, score_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finbert-adapter",
        description="Score headline corpora with a FinBERT-style classifier.",
    )
    parser.add_argument("--input", required=True, help="corpus CSV (needs id and headline columns)")
    parser.add_argument("--output", required=True, help="probabilities CSV to write")
    parser.add_argument(
        "--checkpoint",
        required=True,
        help="model checkpoint name or path (e.g. ProsusAI/finbert)",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--device", default="cpu", help="torch device selector")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = score_corpus(
            args.input,
            args.output,
            checkpoint=args.checkpoint,
            batch_size=args.batch_size,
            device=args.device,
        )
    except (ModelLoadError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for failure in result.failures:
        print(f"warning: row {failure.row} ({failure.record_id or '?'}): {failure.reason}", file=sys.stderr)
    print(f"wrote {result.rows_written} rows to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
