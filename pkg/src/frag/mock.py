"""Deterministic fixture-driven stand-in for a chat backend.

Fixture schema (JSON)::

    {
      "scores": {media_id: {frame_index: [[token, logprob], ...]}},
      "answers": {question_hash: {"required_frames": [int, ...],
                                  "correct": str, "incorrect": str}},
      "landscapes": {media_id: {"center": float, "sigma": float, "jitter": float}},
      "default_distribution": [[token, logprob], ...]
    }

A ``scores`` entry may also be keyed by question hash one level down
(``{frame_index: {question_hash: [...]}}``) when the same media is shared by
several questions. ``landscapes`` generate a unimodal relevance curve for media
too long to enumerate.

Requests decoded from the wire carry no provenance, so frames are identified
by content hash via ``image_index``; byte-identical frames in different media
are indistinguishable there.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from pathlib import Path
from typing import Any

from frag.backend import ChatRequest, ChatResult

DEFAULT_DISTRIBUTION = [["B", 0.0]]
_QUESTION_PREFIX = "Question: "


def question_hash(question: str) -> str:
    return hashlib.sha256(question.strip().encode("utf-8")).hexdigest()


def image_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def unimodal_score(index: int, center: float, sigma: float, jitter: float = 1e-6) -> float:
    """Gaussian bump plus a small deterministic jitter, clamped to [0, 1]."""
    bump = math.exp(-((index - center) ** 2) / (2.0 * sigma * sigma))
    wobble = jitter * (((index * 7919) % 1009) / 1009.0)
    return min(1.0, bump + wobble)


def _distribution_for(p: float) -> list[list[Any]]:
    if p <= 0.0:
        return [["B", 0.0]]
    if p >= 1.0:
        return [["A", 0.0]]
    return [["A", math.log(p)], ["B", math.log1p(-p)]]


def _candidate_hashes(text: str) -> list[str]:
    # the question is some line-prefix of the rendered prompt
    if text.startswith(_QUESTION_PREFIX):
        text = text[len(_QUESTION_PREFIX):]
    lines = text.split("\n")
    return [question_hash("\n".join(lines[: i + 1])) for i in range(len(lines))]


class MockBackend:
    def __init__(self, fixture: dict[str, Any], image_index: dict[str, tuple[str, int]] | None = None):
        self.scores: dict[str, dict[str, Any]] = fixture.get("scores", {})
        self.answers: dict[str, dict[str, Any]] = fixture.get("answers", {})
        self.landscapes: dict[str, dict[str, float]] = fixture.get("landscapes", {})
        self.default_distribution = fixture.get("default_distribution", DEFAULT_DISTRIBUTION)
        self.image_index = image_index or {}
        self._lock = threading.Lock()
        self.scoring_calls = 0
        self.answer_calls = 0

    @classmethod
    def from_file(cls, path: str | Path, **kwargs: Any) -> "MockBackend":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")), **kwargs)

    @property
    def calls(self) -> int:
        return self.scoring_calls + self.answer_calls

    def _locate(self, part) -> tuple[str | None, int | None]:
        if part.media_id is not None and part.frame_index is not None:
            return part.media_id, part.frame_index
        return self.image_index.get(image_digest(part.payload.data), (None, None))

    def _distribution(self, media_id: str | None, frame_index: int | None, text: str) -> list:
        if media_id is None or frame_index is None:
            return self.default_distribution
        entry = self.scores.get(media_id, {}).get(str(frame_index))
        if isinstance(entry, dict):
            entry = next((entry[h] for h in _candidate_hashes(text) if h in entry), None)
        if entry is not None:
            return entry
        if media_id in self.landscapes:
            curve = self.landscapes[media_id]
            return _distribution_for(
                unimodal_score(frame_index, curve["center"], curve["sigma"], curve.get("jitter", 1e-6))
            )
        return self.default_distribution

    def complete(self, request: ChatRequest) -> ChatResult:
        if request.logprobs:
            with self._lock:
                self.scoring_calls += 1
            media_id, frame_index = self._locate(request.images[0]) if request.images else (None, None)
            dist = self._distribution(media_id, frame_index, request.text)
            k = request.top_logprobs or len(dist)
            top = [(str(tok), float(lp)) for tok, lp in dist][:k]
            content = top[0][0] if top else ""
            return ChatResult(content=content, top_logprobs=top)

        with self._lock:
            self.answer_calls += 1
        entry = next((self.answers[h] for h in _candidate_hashes(request.text) if h in self.answers), None)
        if entry is None:
            return ChatResult(content="I cannot tell.")
        shown = {self._locate(p)[1] for p in request.images}
        required = set(entry.get("required_frames", []))
        return ChatResult(content=entry["correct"] if required <= shown else entry["incorrect"])

    def completion_body(self, request: ChatRequest) -> dict[str, Any]:
        """Render a result as an OpenAI-style response body (used by the HTTP mock route)."""
        result = self.complete(request)
        choice: dict[str, Any] = {
            "index": 0,
            "message": {"role": "assistant", "content": result.content},
            "finish_reason": "stop",
        }
        if result.top_logprobs is not None:
            choice["logprobs"] = {
                "content": [
                    {
                        "token": result.content,
                        "logprob": result.top_logprobs[0][1] if result.top_logprobs else 0.0,
                        "top_logprobs": [{"token": t, "logprob": lp} for t, lp in result.top_logprobs],
                    }
                ]
            }
        return {"id": "mock", "object": "chat.completion", "model": request.model, "choices": [choice]}
