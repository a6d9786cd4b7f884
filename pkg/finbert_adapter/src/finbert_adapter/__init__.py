"""finbert_adapter: emit per-headline sentiment probabilities as CSV."""

__version__ = "0.1.0"

from .scorer import ModelLoadError, ScoringResult, score_corpus  # noqa: F401
