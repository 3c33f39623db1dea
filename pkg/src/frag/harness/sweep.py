"""Ablation sweeps over the number of sampled or selected frames."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Any, Literal

from frag.harness.cache import ScoreCache
from frag.harness.config import RunConfig
from frag.harness.manifest import load_manifest
from frag.harness.pipeline import Pipeline, RunReport, build_backends
from frag.backend import ChatBackend

AXES = {"n": "n_sampled", "n_sampled": "n_sampled", "k": "k_selected", "k_selected": "k_selected"}
METRIC_COLUMNS = ("n_questions", "accuracy", "em", "f1", "anls")


@dataclass
class SweepRow:
    axis: str
    value: int
    metrics: dict[str, Any]
    mean_normalized_span: float | None
    mean_pairwise_gap: float | None
    nested: bool | None  # selected sets contain the previous row's (k axis only)
    report: RunReport

    def as_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"axis": self.axis, "value": self.value}
        for col in METRIC_COLUMNS:
            rec[col] = self.metrics.get(col)
        rec["mean_normalized_span"] = self.mean_normalized_span
        rec["mean_pairwise_gap"] = self.mean_pairwise_gap
        rec["nested"] = self.nested
        return rec


def _selected_sets(report: RunReport) -> dict[str, set[int]]:
    return {t.id: set(t.selection["indices"]) for t in report.tasks if t.selection}


def sweep(
    cfg: RunConfig,
    axis: Literal["n", "k", "n_sampled", "k_selected"],
    values: list[int],
    *,
    scorer: ChatBackend | None = None,
    answerer: ChatBackend | None = None,
    cache: ScoreCache | None = None,
) -> list[SweepRow]:
    """Run the pipeline once per value, sharing one score cache across points.

    Scores computed for a dense sampling serve any sparser sampling whose
    indices coincide; other indices are scored on demand.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    field_name = AXES[axis]
    if scorer is None or answerer is None:
        built_scorer, built_answerer = build_backends(cfg)
        scorer, answerer = scorer or built_scorer, answerer or built_answerer
    cache = cache if cache is not None else ScoreCache(cfg.cache_path)
    entries = load_manifest(cfg.manifest, check_media=False) if cfg.manifest else None
    base = cfg.model_copy(update={"out_dir": None})

    rows: list[SweepRow] = []
    previous: dict[str, set[int]] | None = None
    for value in values:
        point = base.model_copy(update={field_name: int(value)})
        report = Pipeline(point, scorer=scorer, answerer=answerer, cache=cache).run(entries)
        spans = [t.selection["normalized_span"] for t in report.tasks if t.selection and "normalized_span" in t.selection]
        gaps = [t.selection["mean_pairwise_gap"] for t in report.tasks if t.selection and "mean_pairwise_gap" in t.selection]
        current = _selected_sets(report)
        nested = None
        if field_name == "k_selected" and previous is not None:
            nested = all(previous[tid] <= current.get(tid, set()) for tid in previous)
        rows.append(
            SweepRow(
                axis=field_name,
                value=int(value),
                metrics=report.metrics,
                mean_normalized_span=fmean(spans) if spans else None,
                mean_pairwise_gap=fmean(gaps) if gaps else None,
                nested=nested,
                report=report,
            )
        )
        previous = current
    return rows


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    fields = ["axis", "value", *METRIC_COLUMNS, "mean_normalized_span", "mean_pairwise_gap", "nested"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.as_record().items()})
    return buf.getvalue()


def write_sweep(rows: list[SweepRow], out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{rows[0].axis}.csv"
    path.write_text(rows_to_csv(rows), encoding="utf-8")
    return path
