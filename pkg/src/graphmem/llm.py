"""Chat-completion gateway: an HTTP client and a scripted mock.

Both clients expose ``complete(request) -> str``. Default generation
parameters are deterministic (greedy decoding, fixed seed) for every role.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Iterable, Protocol, Sequence, Union

import httpx

from .errors import BudgetExhausted, ConfigError, MockMiss, Timeout, TransportError

logger = logging.getLogger(__name__)

TOKEN_ENV = "GRAPHMEM_LLM_TOKEN"


@dataclass(frozen=True)
class GenerationParams:
    max_new_tokens: int = 2048
    seed: int = 42
    temperature: float = 0.0
    top_k: int = 1

    def __post_init__(self):
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    def as_options(self) -> dict[str, Any]:
        return {
            "num_predict": self.max_new_tokens,
            "seed": self.seed,
            "temperature": self.temperature,
            "top_k": self.top_k,
        }


@dataclass(frozen=True)
class ChatRequest:
    user: str
    system: str = ""
    assistant_prefix: str | None = None
    params: GenerationParams = field(default_factory=GenerationParams)

    def __post_init__(self):
        if not self.user or not self.user.strip():
            raise ValueError("user message is empty")

    def messages(self) -> list[dict[str, str]]:
        msgs = []
        if self.system:
            msgs.append({"role": "system", "content": self.system})
        msgs.append({"role": "user", "content": self.user})
        if self.assistant_prefix:
            msgs.append({"role": "assistant", "content": self.assistant_prefix})
        return msgs


class LLMClient(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class HttpLLMClient:
    """Client for a chat-completion endpoint.

    Sends ``{"model", "messages", "options", "stream": false}`` and accepts
    either ``{"message": {"content": ...}}`` or the
    ``{"choices": [{"message": {"content": ...}}]}`` response shape.
    Transient failures (connection errors, timeouts, 429 and 5xx) are retried
    up to ``retries`` times before :class:`BudgetExhausted` is raised.
    """

    def __init__(
        self,
        url: str,
        model: str,
        *,
        timeout: float = 120.0,
        retries: int = 2,
        backoff: float = 0.5,
        max_in_flight: int = 4,
        token: str | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url
        self.model = model
        self.retries = retries
        self.backoff = backoff
        token = token if token is not None else os.environ.get(TOKEN_ENV)
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))
        self.calls = 0

    def _payload(self, req: ChatRequest) -> dict[str, Any]:
        return {
            "model": self.model,
            "messages": req.messages(),
            "options": req.params.as_options(),
            "stream": False,
        }

    def complete(self, req: ChatRequest) -> str:
        payload = self._payload(req)
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * attempt)
            with self._slots:
                self.calls += 1
                try:
                    resp = self._client.post(self.url, json=payload)
                except httpx.TimeoutException as exc:
                    last = Timeout(f"request timed out: {exc}")
                    continue
                except httpx.TransportError as exc:
                    last = TransportError(f"transport failure: {exc}")
                    continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return _content_from_response(resp.json())
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"malformed chat response: {exc}") from exc
        raise BudgetExhausted(f"gave up after {self.retries + 1} attempts: {last}") from last


def _content_from_response(body: dict) -> str:
    if "message" in body:
        return body["message"]["content"]
    return body["choices"][0]["message"]["content"]


Matcher = Union[str, Sequence[str], "re.Pattern[str]", Callable[[ChatRequest], bool]]


def _matches(matcher: Matcher, req: ChatRequest) -> bool:
    text = req.user
    if callable(matcher) and not isinstance(matcher, (str, re.Pattern)):
        return bool(matcher(req))
    if isinstance(matcher, re.Pattern):
        return matcher.search(text) is not None
    if isinstance(matcher, str):
        return matcher in text
    return all(part in text for part in matcher)


@dataclass
class TranscriptEntry:
    request: ChatRequest
    response: str | None


class MockLLMClient:
    """Deterministic client answering from an ordered script.

    Each script entry is ``(matcher, response)``. A matcher is a substring,
    a list of substrings that must all occur, a compiled regex, or a
    predicate over the request; matching is done against the user message.
    The first matching entry wins. Unmatched requests raise
    :class:`MockMiss`. Every call is appended to :attr:`transcript`.
    """

    def __init__(self, script: Iterable[tuple[Matcher, str]] = ()):
        self.script = list(script)
        self.transcript: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> str:
        response = None
        for matcher, resp in self.script:
            if _matches(matcher, req):
                response = resp
                break
        with self._lock:
            self.transcript.append(TranscriptEntry(req, response))
        if response is None:
            raise MockMiss(f"no scripted response for: {req.user[:120]!r}")
        return response


def mock_from_script(pairs: Iterable[tuple[Matcher, str]]) -> MockLLMClient:
    return MockLLMClient(pairs)


def load_mock_script(path: str | os.PathLike) -> dict[str, MockLLMClient]:
    """Read a mock script file (JSON or YAML).

    Either a list of ``{"match": ..., "response": ...}`` entries shared by all
    roles, or a mapping from role name (``extractor``, ``generator``,
    ``judge``, ``default``) to such a list. ``match`` may be a string, a list
    of strings (all required), or ``{"regex": pattern}``.
    """
    import yaml

    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)

    def build(entries) -> MockLLMClient:
        pairs = []
        for i, entry in enumerate(entries or []):
            if not isinstance(entry, dict) or "response" not in entry:
                raise ConfigError(f"mock script entry {i} needs 'match' and 'response'")
            m = entry.get("match", "")
            if isinstance(m, dict) and "regex" in m:
                m = re.compile(m["regex"], re.S)
            pairs.append((m, str(entry["response"])))
        return MockLLMClient(pairs)

    if isinstance(data, list):
        shared = build(data)
        return {"default": shared}
    if isinstance(data, dict):
        return {role: build(entries) for role, entries in data.items()}
    raise ConfigError("mock script must be a list or a mapping of role -> list")


def params_from_mapping(data: dict | None) -> GenerationParams:
    data = dict(data or {})
    if "num_predict" in data:
        data["max_new_tokens"] = data.pop("num_predict")
    known = {k: data[k] for k in asdict(GenerationParams()) if k in data}
    return replace(GenerationParams(), **known)

