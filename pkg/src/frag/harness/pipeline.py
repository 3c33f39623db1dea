"""End-to-end orchestration: sample, score, select, answer, evaluate."""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from frag.answering import answer as ask
from frag.backend import BackendError, BackendUnavailable, ChatBackend, HttpChatBackend
from frag.harness.cache import ScoreCache, score_key
from frag.harness.config import RunConfig
from frag.harness.manifest import ManifestEntry, load_manifest
from frag.media import FrameProposal, MediaError, MediaSource, open_media, uniform_indices, uniform_sample
from frag.metrics import QuestionMetrics, aggregate, question_metrics
from frag.mock import MockBackend
from frag.scoring import ScoredFrame, build_scoring_prompt, score_frame
from frag.selection import SelectionConfig, SelectionResult, select_top_k
from frag.tasks import AnswerType, QueryTask

logger = logging.getLogger(__name__)

REPORT_FILENAME = "report.json"


class ConfigError(ValueError):
    pass


@dataclass
class Counters:
    scoring_seconds: float = 0.0
    answer_seconds: float = 0.0
    scoring_requests: int = 0
    answer_requests: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def count_scoring_request(self) -> None:
        with self.lock:
            self.scoring_requests += 1


@dataclass
class TaskTrace:
    id: str
    status: str  # ok | failed | skipped
    media_id: str
    media_kind: str
    error: str | None = None
    frame_count: int | None = None
    n_sampled: int | None = None
    k: int | None = None
    scores: list[dict[str, Any]] = field(default_factory=list)
    selection: dict[str, Any] | None = None
    answer_raw: str | None = None
    answer_parsed: str | None = None
    correct: bool | None = None
    metrics: dict[str, float] | None = None

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)

    def score_csv(self) -> str:
        selected = set(self.selection["indices"]) if self.selection else set()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["frame_index", "score", "selected"])
        for row in self.scores:
            writer.writerow([row["frame_index"], repr(row["score"]), int(row["frame_index"] in selected)])
        return buf.getvalue()


@dataclass
class RunReport:
    config: dict[str, Any]
    tasks: list[TaskTrace]
    metrics: dict[str, Any]
    failures: dict[str, int]
    aborted: bool = False
    runtime: dict[str, Any] = field(default_factory=dict)

    def to_dict(self, *, include_runtime: bool = True) -> dict[str, Any]:
        out = {
            "config": self.config,
            "tasks": [t.to_dict() for t in self.tasks],
            "metrics": self.metrics,
            "failures": self.failures,
            "aborted": self.aborted,
        }
        if include_runtime:
            out["runtime"] = self.runtime
        return out

    def to_json(self, *, include_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(include_runtime=include_runtime), indent=2, sort_keys=True)

    def task(self, task_id: str) -> TaskTrace:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def write(self, out_dir: str | Path, *, score_csv: bool = True) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / REPORT_FILENAME
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        if score_csv:
            score_dir = out_dir / "scores"
            score_dir.mkdir(exist_ok=True)
            for t in self.tasks:
                if t.scores:
                    (score_dir / f"{safe_name(t.id)}.csv").write_text(t.score_csv(), encoding="utf-8")
        return path


def safe_name(task_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", task_id)


def load_report(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILENAME
    return json.loads(path.read_text(encoding="utf-8"))


def build_backends(cfg: RunConfig) -> tuple[ChatBackend, ChatBackend]:
    if cfg.mock is not None:
        mock = MockBackend.from_file(cfg.mock)
        return mock, mock
    if not cfg.scorer.base_url:
        raise ConfigError("scorer.base_url is required unless a mock fixture is given")

    def http(bc) -> HttpChatBackend:
        return HttpChatBackend(
            bc.base_url,
            api_key_env=bc.api_key_env,
            retries=cfg.retry_budget,
            backoff=tuple(cfg.backoff),
            timeout=bc.timeout,
        )

    scorer = http(cfg.scorer)
    answer_cfg = cfg.answer_backend
    if not answer_cfg.base_url or answer_cfg.base_url == cfg.scorer.base_url:
        return scorer, scorer
    return scorer, http(answer_cfg)


class Pipeline:
    """One configured run; reusable across sweep points so the cache is shared."""

    def __init__(
        self,
        cfg: RunConfig,
        *,
        scorer: ChatBackend | None = None,
        answerer: ChatBackend | None = None,
        cache: ScoreCache | None = None,
    ):
        self.cfg = cfg
        if scorer is None or answerer is None:
            built_scorer, built_answerer = build_backends(cfg)
            scorer = scorer or built_scorer
            answerer = answerer or built_answerer
        self.scorer = scorer
        self.answerer = answerer
        self.cache = cache if cache is not None else ScoreCache(cfg.cache_path)
        self._media: dict[tuple[str, str], MediaSource] = {}

    # -- per-frame ------------------------------------------------------------

    def _score_one(self, source: MediaSource, proposal: FrameProposal, prompt, counters: Counters) -> ScoredFrame:
        key = score_key(self.cfg.scorer.model, source.id, proposal.frame_index, prompt.digest, self.cfg.raw_pa)
        hit = self.cache.get(key)
        if hit is not None:
            return ScoredFrame(proposal, hit[0], degraded=hit[1])
        counters.count_scoring_request()
        frame = score_frame(
            self.scorer,
            proposal,
            source.frame(proposal.frame_index),
            prompt,
            model=self.cfg.scorer.model,
            top_logprobs=self.cfg.top_logprobs,
            raw_pa=self.cfg.raw_pa,
            detail=self.cfg.scorer.detail,
        )
        if not frame.failed:
            self.cache.put(key, frame.score, frame.degraded)
        return frame

    # -- per-task -------------------------------------------------------------

    def _open(self, entry: ManifestEntry) -> MediaSource:
        cache_key = (entry.media_id, str(entry.media_path))
        if cache_key not in self._media:
            self._media[cache_key] = open_media(
                entry.media_path,
                entry.media_kind,
                media_id=entry.media_id,
                work_dir=self.cfg.work_dir,
                fps=self.cfg.fps,
                decoder=self.cfg.decoder,
            )
        return self._media[cache_key]

    def _template_for(self, task: QueryTask) -> str | None:
        if task.prompt_template:
            return task.prompt_template
        return self.cfg.mcq_template if task.answer_type is AnswerType.MCQ else self.cfg.extractive_template

    def run_task(self, entry: ManifestEntry, pool: ThreadPoolExecutor, counters: Counters) -> TaskTrace:
        task = entry.task
        trace = TaskTrace(id=task.id, status="ok", media_id=entry.media_id, media_kind=entry.media_kind.value)
        source = self._open(entry)
        trace.frame_count = source.frame_count
        sel_cfg = self.cfg.selection_for(entry.media_kind)
        trace.k = sel_cfg.k

        if self.cfg.selection_mode == "uniform":
            picks = uniform_indices(source.frame_count, sel_cfg.k)
            trace.n_sampled = len(picks)
            scored = [ScoredFrame(FrameProposal(source.id, idx, j), 0.0) for j, idx in enumerate(picks)]
            selection = select_top_k(scored, SelectionConfig(k=sel_cfg.k), source.frame_count)
        else:
            n_target = sel_cfg.n_sampled or source.frame_count
            proposals = uniform_sample(source, n_target)
            trace.n_sampled = len(proposals)
            prompt = build_scoring_prompt(task, self.cfg.scoring_template)
            started = time.perf_counter()
            scored = list(pool.map(lambda p: self._score_one(source, p, prompt, counters), proposals))
            counters.scoring_seconds += time.perf_counter() - started
            trace.scores = [
                {"frame_index": f.frame_index, "score": f.score, "degraded": f.degraded, "failed": f.failed}
                for f in scored
            ]
            selection = select_top_k(scored, SelectionConfig(k=sel_cfg.k, n_sampled=n_target), source.frame_count)

        trace.selection = _selection_dict(selection)
        images = [source.frame(i) for i in selection.indices]
        started = time.perf_counter()
        counters.answer_requests += 1
        result = ask(
            self.answerer,
            task,
            selection,
            images,
            model=self.cfg.answer_backend.model,
            detail=self.cfg.answer_backend.detail,
            template=self._template_for(task),
        )
        counters.answer_seconds += time.perf_counter() - started
        trace.answer_raw, trace.answer_parsed = result.raw, result.parsed

        if task.ground_truths:
            qm = self._metrics(task, result.parsed)
            trace.metrics = qm.values
            trace.correct = bool(qm.values.get("accuracy", qm.values.get("em")))
        return trace

    def _metrics(self, task: QueryTask, parsed: str) -> QuestionMetrics:
        return question_metrics(
            task.id,
            parsed,
            list(task.ground_truths),
            mcq=task.answer_type is AnswerType.MCQ,
            tau=self.cfg.anls_tau,
        )

    # -- whole run ------------------------------------------------------------

    def run(self, entries: list[ManifestEntry] | None = None) -> RunReport:
        if entries is None:
            if self.cfg.manifest is None:
                raise ConfigError("no manifest given")
            entries = load_manifest(self.cfg.manifest, check_media=False)
        counters = Counters()
        hits0, misses0 = self.cache.hits, self.cache.misses
        traces: list[TaskTrace] = []
        per_question: list[QuestionMetrics] = []
        aborted = False
        started_at = time.time()

        with ThreadPoolExecutor(max_workers=self.cfg.concurrency) as pool:
            for entry in entries:
                if aborted:
                    traces.append(_stub(entry, "skipped", "run aborted: backend unavailable"))
                    continue
                try:
                    trace = self.run_task(entry, pool, counters)
                except BackendUnavailable as exc:
                    logger.error("aborting run: %s", exc)
                    aborted = True
                    trace = _stub(entry, "failed", str(exc))
                except (MediaError, BackendError, ValueError) as exc:
                    logger.warning("task %s failed: %s", entry.task.id, exc)
                    trace = _stub(entry, "failed", str(exc))
                traces.append(trace)
                if entry.task.ground_truths:
                    # failed tasks count as wrong on every applicable metric
                    values = trace.metrics or dict.fromkeys(_metric_names(entry.task), 0.0)
                    per_question.append(QuestionMetrics(entry.task.id, values))

        failures = {
            "tasks_failed": sum(t.status == "failed" for t in traces),
            "tasks_skipped": sum(t.status == "skipped" for t in traces),
            "frames_failed": sum(s["failed"] for t in traces for s in t.scores),
            "frames_degraded": sum(s["degraded"] for t in traces for s in t.scores),
        }
        report = RunReport(
            config=_config_summary(self.cfg),
            tasks=traces,
            metrics=aggregate(per_question).to_dict(),
            failures=failures,
            aborted=aborted,
            runtime={
                "started_at": started_at,
                "scoring_seconds": counters.scoring_seconds,
                "answer_seconds": counters.answer_seconds,
                "scoring_requests": counters.scoring_requests,
                "answer_requests": counters.answer_requests,
                "cache_hits": self.cache.hits - hits0,
                "cache_misses": self.cache.misses - misses0,
            },
        )
        if self.cfg.out_dir is not None:
            report.write(self.cfg.out_dir, score_csv=self.cfg.write_score_csv)
        return report


def _metric_names(task: QueryTask) -> tuple[str, ...]:
    return ("accuracy",) if task.answer_type is AnswerType.MCQ else ("em", "f1", "anls")


def _stub(entry: ManifestEntry, status: str, error: str) -> TaskTrace:
    return TaskTrace(
        id=entry.task.id, status=status, media_id=entry.media_id, media_kind=entry.media_kind.value, error=error
    )


def _selection_dict(sel: SelectionResult) -> dict[str, Any]:
    out: dict[str, Any] = {
        "indices": sel.indices,
        "k_effective": sel.k_effective,
        "tie_events": sel.tie_events,
    }
    if sel.spread is not None:
        out["normalized_span"] = sel.spread.normalized_span
        out["mean_pairwise_gap"] = sel.spread.mean_pairwise_gap
    return out


def _config_summary(cfg: RunConfig) -> dict[str, Any]:
    return {
        "scorer_model": cfg.scorer.model,
        "answerer_model": cfg.answer_backend.model,
        "selection_mode": cfg.selection_mode,
        "video": cfg.selection_for("video").__dict__,
        "document": cfg.selection_for("document").__dict__,
        "raw_pa": cfg.raw_pa,
        "anls_tau": cfg.anls_tau,
        "scoring_template": cfg.scoring_template,
    }


def run_pipeline(cfg: RunConfig, **kwargs) -> RunReport:
    return Pipeline(cfg, **kwargs).run()
