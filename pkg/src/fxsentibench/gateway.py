"""Chat-completion dispatch: retries, bounded concurrency, exact accounting, record/replay."""

from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .errors import (
    AuthError,
    BackendError,
    BatchAborted,
    ExhaustedRetries,
    FixtureMiss,
    GatewayError,
    RateLimited,
    Timeout,
)
from .corpus import whitespace_token_count
from .prompts import RenderedPrompt

DEFAULT_RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class GenerationParams:
    model_name: str
    max_tokens: int
    temperature: float

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff_s: float = 1.0
    backoff_multiplier: float = 2.0
    retryable_statuses: frozenset[int] = DEFAULT_RETRYABLE_STATUSES

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_multiplier < 1.0:
            raise ValueError("backoff_multiplier must be >= 1")


@dataclass(frozen=True)
class ChatExchange:
    request_text: str
    params: GenerationParams
    response_text: str
    prompt_tokens: int
    completion_tokens: int
    latency_s: float
    last_attempt_latency_s: float
    attempt_count: int
    backend_id: str
    tokens_estimated: bool = False

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")
        if self.latency_s < 0 or self.last_attempt_latency_s < 0:
            raise ValueError("latency must be >= 0")
        if self.attempt_count < 1:
            raise ValueError("attempt_count must be >= 1")


@dataclass(frozen=True)
class FailedRequest:
    """Per-item error slot for lenient batch runs."""

    prompt: RenderedPrompt
    error: GatewayError


@dataclass(frozen=True)
class BackendReply:
    response_text: str
    prompt_tokens: int | None
    completion_tokens: int | None


class Backend(Protocol):
    backend_id: str
    records_latency: bool

    def send(self, request_text: str, params: GenerationParams) -> BackendReply: ...


def prompt_hash(request_text: str, params: GenerationParams) -> str:
    """Fixture identity: parameter changes invalidate stale recordings."""
    payload = json.dumps(
        {
            "request_text": request_text,
            "model_name": params.model_name,
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- fixtures --------------------------------------------------------------------


class Fixture:
    """JSON map prompt-hash -> recorded response, enabling bit-identical replays."""

    def __init__(self, entries: dict[str, dict] | None = None):
        self.entries = dict(entries or {})

    @classmethod
    def load(cls, path: str | Path) -> "Fixture":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.entries, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def put(self, key: str, response_text: str, prompt_tokens: int, completion_tokens: int) -> None:
        self.entries[key] = {
            "response_text": response_text,
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
        }

    def get(self, key: str) -> dict:
        try:
            return self.entries[key]
        except KeyError:
            raise FixtureMiss(key) from None


class ReplayBackend:
    """Serves recorded responses keyed by prompt hash; latency is always zero.

    Fixture entries may carry ``transient_failures: n`` to script n rate-limit
    rejections before the recorded response, for retry testing.
    """

    records_latency = False

    def __init__(self, fixture: Fixture, backend_id: str = "replay"):
        self.fixture = fixture
        self.backend_id = backend_id
        self._failures_served: dict[str, int] = {}
        self._lock = threading.Lock()

    def send(self, request_text: str, params: GenerationParams) -> BackendReply:
        key = prompt_hash(request_text, params)
        entry = self.fixture.get(key)
        scripted = int(entry.get("transient_failures", 0))
        if scripted:
            with self._lock:
                served = self._failures_served.get(key, 0)
                if served < scripted:
                    self._failures_served[key] = served + 1
                    raise RateLimited(f"scripted transient failure {served + 1}/{scripted}")
        return BackendReply(
            response_text=entry["response_text"],
            prompt_tokens=entry.get("prompt_tokens"),
            completion_tokens=entry.get("completion_tokens"),
        )


class LiveBackend:
    """Minimal chat-completions client: one user message per request."""

    records_latency = True

    def __init__(
        self,
        base_url: str,
        api_key: str | None,
        model_name: str,
        timeout_s: float = 60.0,
        session=None,
    ):
        if not api_key:
            raise AuthError("no API key configured")
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.backend_id = f"live:{model_name}"
        self.timeout_s = timeout_s
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def send(self, request_text: str, params: GenerationParams) -> BackendReply:
        import requests

        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": request_text}],
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
        }
        try:
            resp = self._session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout_s,
            )
        except requests.Timeout:
            raise Timeout(f"request timed out after {self.timeout_s}s")
        except requests.RequestException as exc:
            raise BackendError(0, str(exc))
        if resp.status_code in (401, 403):
            raise AuthError(f"backend rejected credentials (status {resp.status_code})")
        if resp.status_code == 429:
            raise RateLimited(resp.text[:200])
        if resp.status_code != 200:
            raise BackendError(resp.status_code, resp.text)
        try:
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(resp.status_code, f"malformed response body: {exc}")
        usage = payload.get("usage") or {}
        return BackendReply(
            response_text=text,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )


# --- completion with retries --------------------------------------------------------


def _is_retryable(error: Exception, policy: RetryPolicy) -> bool:
    if isinstance(error, (RateLimited, Timeout)):
        return True
    if isinstance(error, BackendError):
        return error.status in policy.retryable_statuses
    return False


def complete(
    backend: Backend,
    prompt: RenderedPrompt,
    params: GenerationParams,
    policy: RetryPolicy = RetryPolicy(),
    sleep: Callable[[float], None] = time.sleep,
) -> ChatExchange:
    """Send one prompt, retrying transient failures per policy."""
    start = time.monotonic()
    backoff = policy.base_backoff_s
    last_error: Exception | None = None
    for attempt in range(1, policy.max_attempts + 1):
        attempt_start = time.monotonic()
        try:
            reply = backend.send(prompt.text, params)
        except GatewayError as exc:
            if not _is_retryable(exc, policy):
                raise
            last_error = exc
            if attempt < policy.max_attempts and backoff > 0:
                sleep(backoff)
                backoff *= policy.backoff_multiplier
            continue
        now = time.monotonic()
        estimated = reply.prompt_tokens is None or reply.completion_tokens is None
        prompt_tokens = (
            reply.prompt_tokens
            if reply.prompt_tokens is not None
            else whitespace_token_count(prompt.text)
        )
        completion_tokens = (
            reply.completion_tokens
            if reply.completion_tokens is not None
            else whitespace_token_count(reply.response_text)
        )
        total = now - start if backend.records_latency else 0.0
        last = now - attempt_start if backend.records_latency else 0.0
        return ChatExchange(
            request_text=prompt.text,
            params=params,
            response_text=reply.response_text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_s=total,
            last_attempt_latency_s=last,
            attempt_count=attempt,
            backend_id=backend.backend_id,
            tokens_estimated=estimated,
        )
    raise ExhaustedRetries(policy.max_attempts, last_error)


def run_batch(
    backend: Backend,
    prompts: list[RenderedPrompt],
    params: GenerationParams,
    parallelism: int = 1,
    policy: RetryPolicy = RetryPolicy(),
    strict: bool = False,
    sleep: Callable[[float], None] = time.sleep,
) -> list[ChatExchange | FailedRequest]:
    """Run prompts with at most ``parallelism`` in flight; output order matches input."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def one(prompt: RenderedPrompt) -> ChatExchange | FailedRequest:
        try:
            return complete(backend, prompt, params, policy, sleep)
        except GatewayError as exc:
            return FailedRequest(prompt=prompt, error=exc)

    if parallelism == 1:
        results = [one(p) for p in prompts]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(one, prompts))
    if strict:
        for index, item in enumerate(results):
            if isinstance(item, FailedRequest):
                raise BatchAborted(index, item.error)
    return results


def record_fixture(
    backend: Backend,
    prompts: list[RenderedPrompt],
    params: GenerationParams,
    output_path: str | Path,
    parallelism: int = 1,
    policy: RetryPolicy = RetryPolicy(),
) -> Fixture:
    """Run prompts against a (live) backend and persist responses for replay."""
    results = run_batch(backend, prompts, params, parallelism=parallelism, policy=policy, strict=True)
    fixture = Fixture()
    for prompt, item in zip(prompts, results):
        fixture.put(
            prompt_hash(prompt.text, params),
            item.response_text,
            item.prompt_tokens,
            item.completion_tokens,
        )
    fixture.save(output_path)
    return fixture
