from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    mock: bool = False


class ScorePromptRequest(BaseModel):
    question: str
    options: list[str] = Field(default_factory=list)
    template: str | None = None


class ScorePromptResponse(BaseModel):
    query_text: str
    rendered_prompt: str
    digest: str


class FrameScore(BaseModel):
    frame_index: int = Field(ge=0)
    score: float = Field(ge=0.0, le=1.0)
    failed: bool = False


class SelectRequest(BaseModel):
    scores: list[FrameScore] = Field(min_length=1)
    k: int = Field(ge=1)
    t_total: int | None = Field(default=None, ge=1)


class SelectResponse(BaseModel):
    indices: list[int]
    k_effective: int
    tie_events: int
    normalized_span: float | None = None
    mean_pairwise_gap: float | None = None


class MetricsRequest(BaseModel):
    prediction: str
    ground_truths: list[str] = Field(min_length=1)
    answer_type: Literal["mcq", "extractive"] = "extractive"
    anls_tau: float = 0.5


class MetricsResponse(BaseModel):
    accuracy: float | None = None
    em: float | None = None
    f1: float | None = None
    anls: float | None = None


class RunRequest(BaseModel):
    """A run config (same keys as the CLI config file); paths are resolved on the server."""

    config: dict[str, Any]


class RunResponse(BaseModel):
    report: dict[str, Any]
