"""HTTP front for the engine, plus an OpenAI-compatible mock chat endpoint."""

from __future__ import annotations

import base64
import binascii
import logging
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from pydantic import ValidationError

from frag.backend import ChatRequest, ImagePart
from frag.harness.config import RunConfig
from frag.harness.manifest import load_manifest
from frag.harness.pipeline import ConfigError, run_pipeline
from frag.media import FrameProposal, ImagePayload, MediaError, open_media
from frag.metrics import question_metrics
from frag.mock import MockBackend, image_digest
from frag.scoring import SCORING_TEMPLATE, ScoredFrame, build_scoring_prompt
from frag.selection import SelectionConfig, select_top_k
from frag.tasks import AnswerType, QueryTask, options_from_list

from .schemas import (
    HealthResponse,
    MetricsRequest,
    MetricsResponse,
    RunRequest,
    RunResponse,
    ScorePromptRequest,
    ScorePromptResponse,
    SelectRequest,
    SelectResponse,
)

logger = logging.getLogger(__name__)


def index_manifest_images(manifest) -> dict[str, tuple[str, int]]:
    """Map frame content hashes to ``(media_id, frame_index)`` for every readable manifest media."""
    index: dict[str, tuple[str, int]] = {}
    for entry in load_manifest(manifest, check_media=False):
        try:
            source = open_media(entry.media_path, entry.media_kind, media_id=entry.media_id)
        except MediaError as exc:
            logger.warning("skipping %s: %s", entry.media_path, exc)
            continue
        for i in range(source.frame_count):
            index.setdefault(image_digest(source.frame(i).data), (source.id, i))
    return index


def _decode_image(url: str) -> ImagePayload:
    if not url.startswith("data:") or ";base64," not in url:
        raise HTTPException(400, "image parts must be base64 data URLs")
    header, encoded = url.split(";base64,", 1)
    fmt = header.removeprefix("data:image/")
    try:
        return ImagePayload(data=base64.b64decode(encoded, validate=True), format=fmt)
    except binascii.Error:
        raise HTTPException(400, "invalid base64 image payload") from None


def wire_to_request(body: dict[str, Any]) -> ChatRequest:
    try:
        content = body["messages"][-1]["content"]
    except (KeyError, IndexError, TypeError):
        raise HTTPException(400, "request needs a user message") from None
    if isinstance(content, str):
        content = [{"type": "text", "text": content}]
    images, texts = [], []
    for part in content:
        if part.get("type") == "image_url":
            images.append(ImagePart(payload=_decode_image(part["image_url"]["url"])))
        elif part.get("type") == "text":
            texts.append(part["text"])
    return ChatRequest(
        model=body.get("model", "default"),
        images=tuple(images),
        text="\n".join(texts),
        max_tokens=int(body.get("max_tokens", 16)),
        temperature=float(body.get("temperature", 0.0)),
        logprobs=bool(body.get("logprobs", False)),
        top_logprobs=body.get("top_logprobs"),
    )


def create_app(mock: MockBackend | None = None) -> FastAPI:
    app = FastAPI(title="frag", version="0.1.0")
    app.state.mock = mock

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(mock=app.state.mock is not None)

    @app.post("/v1/chat/completions")
    async def chat_completions(request: Request) -> dict[str, Any]:
        if app.state.mock is None:
            raise HTTPException(404, "no mock fixture loaded")
        body = await request.json()
        return app.state.mock.completion_body(wire_to_request(body))

    @app.post("/score-prompt", response_model=ScorePromptResponse)
    def score_prompt(req: ScorePromptRequest) -> ScorePromptResponse:
        answer_type = AnswerType.MCQ if req.options else AnswerType.EXTRACTIVE
        try:
            task = QueryTask(
                id="adhoc", question=req.question, answer_type=answer_type, options=options_from_list(req.options)
            )
            prompt = build_scoring_prompt(task, req.template or SCORING_TEMPLATE)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        return ScorePromptResponse(
            query_text=prompt.query_text, rendered_prompt=prompt.rendered_prompt, digest=prompt.digest
        )

    @app.post("/select", response_model=SelectResponse)
    def select(req: SelectRequest) -> SelectResponse:
        frames = [
            ScoredFrame(FrameProposal("adhoc", s.frame_index, j), s.score, failed=s.failed)
            for j, s in enumerate(req.scores)
        ]
        result = select_top_k(frames, SelectionConfig(k=req.k), req.t_total)
        return SelectResponse(
            indices=result.indices,
            k_effective=result.k_effective,
            tie_events=result.tie_events,
            normalized_span=result.spread.normalized_span if result.spread else None,
            mean_pairwise_gap=result.spread.mean_pairwise_gap if result.spread else None,
        )

    @app.post("/metrics", response_model=MetricsResponse)
    def metrics(req: MetricsRequest) -> MetricsResponse:
        qm = question_metrics(
            "adhoc", req.prediction, req.ground_truths, mcq=req.answer_type == "mcq", tau=req.anls_tau
        )
        return MetricsResponse(**qm.values)

    @app.post("/runs", response_model=RunResponse)
    def runs(req: RunRequest) -> RunResponse:
        try:
            cfg = RunConfig.model_validate(req.config)
            report = run_pipeline(cfg)
        except ValidationError as exc:
            raise HTTPException(422, exc.errors(include_url=False)) from None
        except (ConfigError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from None
        return RunResponse(report=report.to_dict())

    return app
