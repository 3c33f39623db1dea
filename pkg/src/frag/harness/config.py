from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, Field

from frag.media import DEFAULT_DECODER, DEFAULT_FPS, MediaKind
from frag.scoring import MIN_TOP_LOGPROBS, SCORING_TEMPLATE
from frag.selection import (
    DOCUMENT_K_SELECTED,
    VIDEO_K_SELECTED,
    VIDEO_N_SAMPLED,
    SelectionConfig,
)


class BackendConfig(BaseModel):
    base_url: str | None = None
    model: str = "default"
    api_key_env: str = "FRAG_API_KEY"
    detail: str | None = None
    timeout: float = 120.0


class SelectionDefaults(BaseModel):
    n_sampled: int | None = Field(default=None, ge=1)
    k_selected: int = Field(ge=1)


class RunConfig(BaseModel):
    manifest: Path | None = None
    scorer: BackendConfig = Field(default_factory=BackendConfig)
    # None: answer with the scorer's backend and model
    answerer: BackendConfig | None = None
    mock: Path | None = None

    video: SelectionDefaults = Field(
        default_factory=lambda: SelectionDefaults(n_sampled=VIDEO_N_SAMPLED, k_selected=VIDEO_K_SELECTED)
    )
    document: SelectionDefaults = Field(
        default_factory=lambda: SelectionDefaults(n_sampled=None, k_selected=DOCUMENT_K_SELECTED)
    )
    n_sampled: int | None = Field(default=None, ge=1)
    k_selected: int | None = Field(default=None, ge=1)
    selection_mode: Literal["frag", "uniform"] = "frag"

    concurrency: int = Field(default=8, ge=1)
    retry_budget: int = Field(default=2, ge=0)
    backoff: list[float] = Field(default_factory=lambda: [0.5, 2.0])
    top_logprobs: int = Field(default=MIN_TOP_LOGPROBS, ge=MIN_TOP_LOGPROBS)
    raw_pa: bool = False

    scoring_template: str = SCORING_TEMPLATE
    mcq_template: str | None = None
    extractive_template: str | None = None
    anls_tau: float = Field(default=0.5, gt=0.0, le=1.0)

    cache_path: Path | None = None
    out_dir: Path | None = None
    write_score_csv: bool = True

    fps: float = Field(default=DEFAULT_FPS, gt=0.0)
    decoder: str = DEFAULT_DECODER
    work_dir: Path | None = None

    @property
    def answer_backend(self) -> BackendConfig:
        return self.answerer or self.scorer

    def selection_for(self, kind: MediaKind | str) -> SelectionConfig:
        defaults = self.video if MediaKind(kind) is MediaKind.VIDEO else self.document
        n = self.n_sampled if self.n_sampled is not None else defaults.n_sampled
        k = self.k_selected if self.k_selected is not None else defaults.k_selected
        return SelectionConfig(k=k, n_sampled=n)


def load_config(path: str | Path | None, **overrides) -> RunConfig:
    """Read a YAML/JSON config file and apply non-``None`` keyword overrides."""
    data: dict = {}
    if path is not None:
        path = Path(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        # relative paths in the file are relative to the file
        for key in ("manifest", "mock", "cache_path", "out_dir", "work_dir"):
            if data.get(key) and not Path(data[key]).is_absolute():
                data[key] = str(path.parent / data[key])
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("scorer_model", "answerer_model"):
            section = key.split("_")[0]
            base = data.get(section) or (dict(data.get("scorer") or {}) if section == "answerer" else {})
            data[section] = {**base, "model": value}
        else:
            data[key] = value
    return RunConfig.model_validate(data)
