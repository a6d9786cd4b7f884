"""Exception taxonomy shared across the pipeline."""

from __future__ import annotations


class FxSentiBenchError(Exception):
    """Base class for all package errors."""


class ConfigError(FxSentiBenchError):
    pass


# --- corpus ---------------------------------------------------------------

class CorpusError(FxSentiBenchError):
    pass


class SchemaError(CorpusError):
    def __init__(self, row: int, field: str, reason: str):
        super().__init__(f"row {row}, field {field!r}: {reason}")
        self.row = row
        self.field = field
        self.reason = reason


class UnknownTicker(CorpusError):
    def __init__(self, row: int, ticker: str):
        super().__init__(f"row {row}: ticker {ticker!r} not in configured universe")
        self.row = row
        self.ticker = ticker


class EmptySelection(CorpusError):
    pass


class UnknownTokenizer(CorpusError):
    pass


# --- prompt engine --------------------------------------------------------

class PromptError(FxSentiBenchError):
    pass


class GranularityMismatch(PromptError):
    pass


class EmptyGroup(PromptError):
    pass


class UnknownTemplate(PromptError):
    pass


# --- gateway --------------------------------------------------------------

class GatewayError(FxSentiBenchError):
    pass


class AuthError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class Timeout(GatewayError):
    pass


class BackendError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend returned status {status}: {body[:200]}")
        self.status = status
        self.body = body


class ExhaustedRetries(GatewayError):
    def __init__(self, attempts: int, last_error: Exception):
        super().__init__(f"gave up after {attempts} attempts: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


class FixtureMiss(GatewayError):
    def __init__(self, prompt_hash: str):
        super().__init__(f"no recorded response for prompt hash {prompt_hash}")
        self.prompt_hash = prompt_hash


class BatchAborted(GatewayError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"batch aborted at item {index}: {cause}")
        self.index = index
        self.cause = cause


# --- response parsing -----------------------------------------------------

class ResponseParseError(FxSentiBenchError):
    pass


class Unparseable(ResponseParseError):
    def __init__(self, text: str):
        super().__init__(f"no sentiment found in response: {text[:120]!r}")
        self.text = text


class OutOfRange(ResponseParseError):
    def __init__(self, value: float):
        super().__init__(f"score {value} outside [-1, 1]")
        self.value = value


class NoJsonFound(ResponseParseError):
    pass


class MalformedJson(ResponseParseError):
    pass


class MissingTicker(ResponseParseError):
    def __init__(self, missing: frozenset, partial=None):
        super().__init__(f"expected tickers absent from response: {sorted(missing)}")
        self.missing = missing
        # entries that did parse, so callers can salvage a partial response
        self.partial = dict(partial or {})


# --- signals --------------------------------------------------------------

class SignalError(FxSentiBenchError):
    pass


class InvalidDistribution(SignalError):
    pass


class MixedModels(SignalError):
    pass


class NonPositivePrice(SignalError):
    pass


class UnmatchedDays(SignalError):
    pass


# --- evaluation -----------------------------------------------------------

class EvaluationError(FxSentiBenchError):
    pass


class UnknownRecordId(EvaluationError):
    pass


class LengthMismatch(EvaluationError):
    pass


class EmptyInput(EvaluationError):
    pass


class DegenerateSeries(EvaluationError):
    pass


class IndexMismatch(EvaluationError):
    pass


class EmptySeries(EvaluationError):
    pass
