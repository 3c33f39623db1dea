"""Per-frame relevance scoring through a yes/no multiple-choice prompt."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from frag.backend import (
    BackendError,
    BackendUnavailable,
    ChatBackend,
    ChatRequest,
    ImagePart,
    ProtocolError,
)
from frag.media import FrameProposal, ImagePayload
from frag.tasks import QueryTask

SCORING_TEMPLATE = (
    "Question: {q}\n"
    "Does the information within the image provide the necessary details "
    "to accurately answer the given question?\n"
    "A. yes\n"
    "B. no\n"
    "Answer with the option's letter from the given choices directly."
)
YES_TOKEN = "A"
NO_TOKEN = "B"
MIN_TOP_LOGPROBS = 5


@dataclass(frozen=True)
class ScoringPrompt:
    query_text: str
    rendered_prompt: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.rendered_prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ScoredFrame:
    proposal: FrameProposal
    score: float
    degraded: bool = False
    failed: bool = False
    error: str | None = None

    @property
    def frame_index(self) -> int:
        return self.proposal.frame_index


def build_scoring_prompt(query: QueryTask, template: str = SCORING_TEMPLATE) -> ScoringPrompt:
    if not query.question.strip():
        raise ValueError("scoring prompt needs a non-empty question")
    q = query.full_question()
    # plain replace: question text may itself contain braces
    return ScoringPrompt(query_text=q, rendered_prompt=template.replace("{q}", q))


def normalize_token(token: str) -> str:
    token = token.strip()
    if token.endswith((".", ":")):
        token = token[:-1]
    return token


def extract_score(entries: list[tuple[str, float]], *, raw_pa: bool = False) -> tuple[float, bool]:
    """Turn first-token alternatives into ``(score, degraded)``.

    Both options seen: ``pA / (pA + pB)`` (or plain ``pA`` with ``raw_pa``).
    Only "A": ``pA``. Only "B": 0. Neither: 0 and degraded.
    """
    p_yes = p_no = None
    for token, logprob in entries:
        norm = normalize_token(token)
        if norm == YES_TOKEN and p_yes is None:
            p_yes = math.exp(logprob)
        elif norm == NO_TOKEN and p_no is None:
            p_no = math.exp(logprob)

    if p_yes is None:
        return 0.0, p_no is None
    if p_no is None or raw_pa:
        return min(1.0, p_yes), False
    total = p_yes + p_no
    return (p_yes / total if total > 0 else 0.0), False


def scoring_request(
    model: str,
    image: ImagePayload,
    prompt: ScoringPrompt,
    proposal: FrameProposal | None = None,
    *,
    top_logprobs: int = MIN_TOP_LOGPROBS,
    detail: str | None = None,
) -> ChatRequest:
    part = ImagePart(
        payload=image,
        media_id=proposal.media_id if proposal else None,
        frame_index=proposal.frame_index if proposal else None,
    )
    return ChatRequest(
        model=model,
        images=(part,),
        text=prompt.rendered_prompt,
        max_tokens=1,
        temperature=0.0,
        logprobs=True,
        top_logprobs=max(MIN_TOP_LOGPROBS, top_logprobs),
        detail=detail,
    )


def score_frame(
    backend: ChatBackend,
    proposal: FrameProposal,
    image: ImagePayload,
    prompt: ScoringPrompt,
    *,
    model: str = "default",
    top_logprobs: int = MIN_TOP_LOGPROBS,
    raw_pa: bool = False,
    detail: str | None = None,
) -> ScoredFrame:
    """Score one frame.

    Exhausted retries yield a ``failed`` frame. Protocol errors and an
    unreachable backend propagate to the caller.
    """
    if not image.data:
        raise ValueError(f"empty image payload for frame {proposal.frame_index}")
    request = scoring_request(model, image, prompt, proposal, top_logprobs=top_logprobs, detail=detail)
    try:
        result = backend.complete(request)
    except (ProtocolError, BackendUnavailable):
        raise
    except BackendError as exc:
        return ScoredFrame(proposal, 0.0, failed=True, error=str(exc))
    if result.top_logprobs is None:
        raise ProtocolError("response carries no logprobs", str(result.raw))
    score, degraded = extract_score(result.top_logprobs, raw_pa=raw_pa)
    return ScoredFrame(proposal, score, degraded=degraded)
