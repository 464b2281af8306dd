"""External model clients behind three narrow interfaces.

Chat completion, image generation, and structured metadata extraction each
get a backend protocol, a retrying wrapper, and a deterministic mock so the
whole pipeline runs offline and bit-identically in tests. Real HTTP
adapters speak an OpenAI-style JSON API; credentials are resolved from the
environment at call time and never appear in logs or error messages.
"""

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import httpx

from .errors import ExtractionFailed, PolicyError, ProtocolError, ProviderUnavailable
from .textutil import fnv1a64

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_MAX_RETRIES = 2
DEFAULT_BACKOFF_BASE_S = 0.5
DEFAULT_MAX_CONCURRENCY = 4

CHAT_KEY_ENV = "PERSODE_CHAT_KEY"
IMAGE_KEY_ENV = "PERSODE_IMAGE_KEY"

Sleeper = Callable[[float], None]

EXTRACTION_FIELDS = ("emotions", "people", "objects", "places", "hashtags", "salience")

REFORMULATION_HINT = (
    "Return ONLY a JSON object with keys emotions (list of {label, intensity}), "
    "people, objects, places, hashtags (lists of strings), and salience (number in [0,1])."
)


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = ""
    credential_env: str = CHAT_KEY_ENV  # name of the env var, never the secret itself
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_retries: int = DEFAULT_MAX_RETRIES
    backoff_base_s: float = DEFAULT_BACKOFF_BASE_S
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")

    def credential(self) -> str:
        value = os.environ.get(self.credential_env, "")
        if not value:
            raise ProviderUnavailable(f"credential env var {self.credential_env} is not set")
        return value


@dataclass(frozen=True)
class ChatRequest:
    user_message: str
    style_fragments: tuple[str, ...] = ()
    retrieved_memories: tuple[tuple[str, str | None, float], ...] = ()  # (summary, emotion, age days)
    dialogue_window: tuple[tuple[str, str], ...] = ()  # (speaker, text)

    def __post_init__(self):
        if not self.user_message.strip():
            raise ValueError("user_message must be non-empty")


class ChatBackend(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class ImageBackend(Protocol):
    def generate(self, prompt: str) -> str: ...


class ExtractorBackend(Protocol):
    def extract(self, text: str, hint: str | None = None) -> str: ...


class _Limiter:
    """Per-provider concurrency caps, keyed by backend identity."""

    def __init__(self):
        self._lock = threading.Lock()
        self._semaphores: dict[int, threading.BoundedSemaphore] = {}

    def get(self, backend, limit: int) -> threading.BoundedSemaphore:
        with self._lock:
            key = id(backend)
            if key not in self._semaphores:
                self._semaphores[key] = threading.BoundedSemaphore(limit)
            return self._semaphores[key]


_limiter = _Limiter()


def _with_retries(call, cfg: ProviderConfig, sleep: Sleeper):
    """Run call() with exponential backoff on retryable failures."""
    attempts = cfg.max_retries + 1
    last: ProviderUnavailable | None = None
    for attempt in range(attempts):
        try:
            return call()
        except ProviderUnavailable as exc:
            last = exc
            if attempt < attempts - 1:
                sleep(cfg.backoff_base_s * (2**attempt))
    raise last


def chat_complete(
    req: ChatRequest,
    cfg: ProviderConfig,
    backend: ChatBackend,
    sleep: Sleeper | None = None,
) -> str:
    """Chat completion with retries; empty upstream reply is a protocol error."""
    sleep = sleep or time.sleep
    limiter = _limiter.get(backend, cfg.max_concurrency)
    with limiter:
        reply = _with_retries(lambda: backend.complete(req), cfg, sleep)
    if not reply or not reply.strip():
        raise ProtocolError("chat provider returned an empty reply")
    return reply


def generate_image(
    prompt: str,
    cfg: ProviderConfig,
    backend: ImageBackend,
    sleep: Sleeper | None = None,
) -> str:
    """Image generation with retries; returns an opaque image reference."""
    if not prompt.strip():
        raise ValueError("image prompt must be non-empty")
    sleep = sleep or time.sleep
    limiter = _limiter.get(backend, cfg.max_concurrency)
    with limiter:
        ref = _with_retries(lambda: backend.generate(prompt), cfg, sleep)
    if not ref:
        raise ProtocolError("image provider returned an empty reference")
    return ref


def _validate_extraction_payload(payload) -> dict:
    if not isinstance(payload, dict):
        raise ValueError("extraction payload must be a JSON object")
    for key in ("people", "objects", "places", "hashtags"):
        value = payload.get(key, [])
        if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
            raise ValueError(f"{key} must be a list of strings")
    emotions = payload.get("emotions", [])
    if not isinstance(emotions, list):
        raise ValueError("emotions must be a list")
    for item in emotions:
        if not isinstance(item, dict) or "label" not in item or "intensity" not in item:
            raise ValueError("each emotion needs label and intensity")
        if not isinstance(item["intensity"], (int, float)) or isinstance(item["intensity"], bool):
            raise ValueError("emotion intensity must be numeric")
    salience = payload.get("salience", 0.0)
    if not isinstance(salience, (int, float)) or isinstance(salience, bool):
        raise ValueError("salience must be numeric")
    summary = payload.get("event_summary", "")
    if not isinstance(summary, str):
        raise ValueError("event_summary must be a string")
    # clamp out-of-range numerics rather than rejecting them
    payload["salience"] = min(1.0, max(0.0, float(salience)))
    for item in emotions:
        item["intensity"] = min(1.0, max(0.0, float(item["intensity"])))
    return payload


def llm_extract(
    segment_text: str,
    cfg: ProviderConfig,
    backend: ExtractorBackend,
    sleep: Sleeper | None = None,
) -> dict:
    """Structured extraction via a chat-capable model.

    Parses a strict JSON schema from the model output; one reformulation
    retry on schema violations, then ExtractionFailed so the caller can use
    the rule-based fallback.
    """
    import time

    if not segment_text.strip():
        raise ValueError("segment text must be non-empty")
    sleep = sleep or time.sleep
    limiter = _limiter.get(backend, cfg.max_concurrency)
    hint = None
    last_error = "no output"
    for _ in range(2):  # initial attempt + one reformulation
        with limiter:
            raw = _with_retries(lambda: backend.extract(segment_text, hint), cfg, sleep)
        try:
            return _validate_extraction_payload(json.loads(raw))
        except (json.JSONDecodeError, ValueError) as exc:
            last_error = str(exc)
            hint = REFORMULATION_HINT
    raise ExtractionFailed(f"extractor output failed schema validation: {last_error}")


def extraction_backend_adapter(
    cfg: ProviderConfig, backend: ExtractorBackend, sleep: Sleeper | None = None
) -> Callable[[str], dict]:
    """Adapt llm_extract to the analyzer's backend-callable interface."""

    def run(text: str) -> dict:
        try:
            return llm_extract(text, cfg, backend, sleep)
        except (ProviderUnavailable, ProtocolError) as exc:
            raise ExtractionFailed(f"extraction backend failed: {exc}") from exc

    return run


# ---------------------------------------------------------------------------
# Deterministic mocks.


class MockChatBackend:
    """Echoes the first retrieved memory so end-to-end tests can assert on it."""

    def complete(self, req: ChatRequest) -> str:
        if req.retrieved_memories:
            summary, emotion, _age = req.retrieved_memories[0]
            feeling = emotion or "reflective"
            return (
                f"Looking back on {summary}, the feeling of {feeling} stays with me. "
                "There is more in this moment worth holding onto."
            )
        return (
            "Thank you for sharing this. Taking a quiet moment to reflect: "
            "what part of it stays with you the most?"
        )


class MockImageBackend:
    """Stable reference: 'img-' + 16 hex digits of the prompt's FNV-1a hash."""

    def generate(self, prompt: str) -> str:
        return "img-" + format(fnv1a64(prompt.encode("utf-8")), "016x")


class MockExtractorBackend:
    """Returns canned raw outputs, in order; repeats the last one."""

    def __init__(self, outputs: Sequence[str]):
        if not outputs:
            raise ValueError("need at least one canned output")
        self.outputs = list(outputs)
        self.calls = 0

    def extract(self, text: str, hint: str | None = None) -> str:
        out = self.outputs[min(self.calls, len(self.outputs) - 1)]
        self.calls += 1
        return out


class FlakyBackend:
    """Test double failing n times before delegating; counts attempts."""

    def __init__(self, inner, failures: int, exc: Exception | None = None):
        self.inner = inner
        self.failures = failures
        self.exc = exc or ProviderUnavailable("simulated transport failure")
        self.attempts = 0

    def _maybe_fail(self):
        self.attempts += 1
        if self.attempts <= self.failures:
            raise self.exc

    def complete(self, req):
        self._maybe_fail()
        return self.inner.complete(req)

    def generate(self, prompt):
        self._maybe_fail()
        return self.inner.generate(prompt)

    def extract(self, text, hint=None):
        self._maybe_fail()
        return self.inner.extract(text, hint)


# ---------------------------------------------------------------------------
# HTTP adapters (OpenAI-style JSON APIs). Never exercised by the test suite's
# network-free paths; kept thin on purpose.


def _post_json(cfg: ProviderConfig, payload: dict) -> dict:
    try:
        response = httpx.post(
            cfg.endpoint,
            json=payload,
            headers={"Authorization": f"Bearer {cfg.credential()}"},
            timeout=cfg.timeout_s,
        )
    except httpx.HTTPError as exc:
        # exc messages may embed the URL but never the credential
        raise ProviderUnavailable(f"transport failure: {type(exc).__name__}") from exc
    if response.status_code == 400 and b"content_policy" in response.content:
        raise PolicyError("content policy rejection", reason=response.text[:200])
    if response.status_code >= 500 or response.status_code == 429:
        raise ProviderUnavailable(f"upstream status {response.status_code}")
    if response.status_code >= 400:
        raise ProtocolError(f"upstream status {response.status_code}")
    try:
        return response.json()
    except ValueError as exc:
        raise ProtocolError("upstream response is not JSON") from exc


class HttpChatBackend:
    """Chat-completions adapter for an OpenAI-style endpoint."""

    def __init__(self, cfg: ProviderConfig, model: str = "gpt-4o"):
        self.cfg = cfg
        self.model = model

    def complete(self, req: ChatRequest) -> str:
        system = "\n".join(req.style_fragments)
        memory_lines = "\n".join(
            f"- {summary} (felt {emotion or 'unspecified'}, {age:.1f} days ago)"
            for summary, emotion, age in req.retrieved_memories
        )
        if memory_lines:
            system += "\n\nRelevant past memories:\n" + memory_lines
        messages = [{"role": "system", "content": system}] if system.strip() else []
        for speaker, text in req.dialogue_window:
            role = "assistant" if speaker == "agent" else "user"
            messages.append({"role": role, "content": text})
        messages.append({"role": "user", "content": req.user_message})
        data = _post_json(self.cfg, {"model": self.model, "messages": messages})
        try:
            reply = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("malformed chat completion response") from exc
        if not isinstance(reply, str) or not reply.strip():
            raise ProtocolError("chat completion reply is empty")
        return reply


class HttpImageBackend:
    """Image-generations adapter for an OpenAI-style endpoint."""

    def __init__(self, cfg: ProviderConfig, model: str = "dall-e-3"):
        self.cfg = cfg
        self.model = model

    def generate(self, prompt: str) -> str:
        data = _post_json(self.cfg, {"model": self.model, "prompt": prompt, "n": 1})
        try:
            ref = data["data"][0]["url"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("malformed image generation response") from exc
        if not isinstance(ref, str) or not ref:
            raise ProtocolError("image reference is empty")
        return ref


class HttpExtractorBackend:
    """Extraction adapter: asks a chat model for the strict JSON payload."""

    PROMPT = (
        "Extract journaling metadata from the conversation excerpt below. "
        + REFORMULATION_HINT
        + " Also include event_summary (one sentence)."
    )

    def __init__(self, cfg: ProviderConfig, model: str = "gpt-4o"):
        self.cfg = cfg
        self.model = model

    def extract(self, text: str, hint: str | None = None) -> str:
        prompt = self.PROMPT if hint is None else self.PROMPT + "\n" + hint
        messages = [
            {"role": "system", "content": prompt},
            {"role": "user", "content": text},
        ]
        data = _post_json(self.cfg, {"model": self.model, "messages": messages})
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("malformed extractor response") from exc


@dataclass
class ProviderSet:
    """The three providers plus their configs, bundled for the engine."""

    chat: ChatBackend
    image: ImageBackend
    extractor: ExtractorBackend | None
    chat_cfg: ProviderConfig = field(default_factory=ProviderConfig)
    image_cfg: ProviderConfig = field(
        default_factory=lambda: ProviderConfig(credential_env=IMAGE_KEY_ENV)
    )
    sleep: Sleeper | None = None

    @classmethod
    def mocks(cls) -> "ProviderSet":
        """Fully offline, bit-deterministic provider set (no extractor: the
        analyzer's rule-based fallback handles extraction)."""
        return cls(
            chat=MockChatBackend(),
            image=MockImageBackend(),
            extractor=None,
            sleep=lambda _s: None,
        )
