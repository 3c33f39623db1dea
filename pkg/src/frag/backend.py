"""OpenAI-compatible chat backend: request model, wire serialization, HTTP client with retry."""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

from frag.media import ImagePayload

logger = logging.getLogger(__name__)

DEFAULT_BACKOFF = (0.5, 2.0)


class BackendError(Exception):
    """Base class for chat backend failures."""


class TransportError(BackendError):
    """The request could not be completed within the retry budget, or was rejected (4xx)."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


class BackendUnavailable(TransportError):
    """No connection could be made to the backend at all."""


class ProtocolError(BackendError):
    """The backend answered, but the body does not follow the chat completions schema."""

    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}; raw body: {raw[:500]}")
        self.raw = raw


@dataclass(frozen=True)
class ImagePart:
    payload: ImagePayload
    # provenance only; never serialized onto the wire
    media_id: str | None = None
    frame_index: int | None = None

    def data_url(self) -> str:
        return f"data:{self.payload.mime};base64,{base64.b64encode(self.payload.data).decode('ascii')}"


@dataclass(frozen=True)
class ChatRequest:
    """A single-turn user message: image parts first, then one text part."""

    model: str
    images: tuple[ImagePart, ...]
    text: str
    max_tokens: int
    temperature: float = 0.0
    logprobs: bool = False
    top_logprobs: int | None = None
    detail: str | None = None

    def to_payload(self) -> dict[str, Any]:
        content: list[dict[str, Any]] = []
        for part in self.images:
            image_url: dict[str, Any] = {"url": part.data_url()}
            if self.detail is not None:
                image_url["detail"] = self.detail
            content.append({"type": "image_url", "image_url": image_url})
        content.append({"type": "text", "text": self.text})
        body: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.logprobs:
            body["logprobs"] = True
            body["top_logprobs"] = self.top_logprobs
        return body


@dataclass
class ChatResult:
    content: str
    top_logprobs: list[tuple[str, float]] | None = None
    raw: dict[str, Any] = field(default_factory=dict, repr=False)


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResult: ...


def parse_completion(body: str | bytes) -> ChatResult:
    """Extract message content and first-token alternatives from a chat completions body."""
    raw = body.decode("utf-8", "replace") if isinstance(body, bytes) else body
    try:
        data = json.loads(raw)
        choice = data["choices"][0]
        content = choice["message"]["content"] or ""
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed chat completion ({exc.__class__.__name__}: {exc})", raw) from exc

    top: list[tuple[str, float]] | None = None
    logprobs = choice.get("logprobs")
    if logprobs is not None:
        try:
            entries = logprobs["content"][0]["top_logprobs"]
            top = [(str(e["token"]), float(e["logprob"])) for e in entries]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed logprobs ({exc.__class__.__name__}: {exc})", raw) from exc
    return ChatResult(content=content, top_logprobs=top, raw=data)


class HttpChatBackend:
    """POSTs to ``{base_url}/chat/completions``.

    Transport errors and 5xx responses are retried ``retries`` times with the
    given backoff schedule; 4xx responses fail immediately.
    """

    def __init__(
        self,
        base_url: str,
        *,
        api_key: str | None = None,
        api_key_env: str = "FRAG_API_KEY",
        retries: int = 2,
        backoff: tuple[float, ...] = DEFAULT_BACKOFF,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.url = base_url.rstrip("/") + "/chat/completions"
        key = api_key if api_key is not None else os.environ.get(api_key_env)
        self._headers = {"Authorization": f"Bearer {key}"} if key else {}
        self.retries = retries
        self.backoff = tuple(backoff)
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep
        self._lock = threading.Lock()
        self.calls = 0

    def _delay(self, attempt: int) -> float:
        if not self.backoff:
            return 0.0
        return self.backoff[min(attempt, len(self.backoff) - 1)]

    def complete(self, request: ChatRequest) -> ChatResult:
        payload = request.to_payload()
        last: TransportError | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self._delay(attempt - 1))
            with self._lock:
                self.calls += 1
            try:
                resp = self._client.post(self.url, json=payload, headers=self._headers)
            except httpx.ConnectError as exc:
                last = BackendUnavailable(f"cannot connect to {self.url}: {exc}")
                continue
            except httpx.HTTPError as exc:
                last = TransportError(f"transport error: {exc}")
                continue
            if resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}", resp.status_code, resp.text)
                logger.warning("backend returned %s (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}", resp.status_code, resp.text)
            return parse_completion(resp.content)
        assert last is not None
        raise last

    def close(self) -> None:
        self._client.close()
