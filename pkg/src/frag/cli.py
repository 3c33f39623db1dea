"""``frag`` command line: run, sweep, score-dump, serve."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from frag.harness.config import load_config
from frag.harness.manifest import ManifestError, load_manifest
from frag.harness.pipeline import ConfigError, Pipeline, TaskTrace, load_report
from frag.harness.sweep import rows_to_csv, sweep, write_sweep


def _run_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML/JSON run config."),
        click.option("--manifest", type=click.Path(), help="JSONL manifest of questions."),
        click.option("--k", "k_selected", type=int, help="Frames to select (Top-K)."),
        click.option("--n", "n_sampled", type=int, help="Frames to sample before scoring."),
        click.option("--scorer-model"),
        click.option("--answerer-model"),
        click.option("--mock", type=click.Path(), help="Mock backend fixture (offline runs)."),
        click.option("--cache", "cache_path", type=click.Path(), help="Score cache directory."),
        click.option("--out", "out_dir", type=click.Path(), help="Output directory for report.json and CSVs."),
        click.option("--concurrency", type=int),
        click.option("--uniform", is_flag=True, default=None, help="Uniform-K baseline: skip scoring."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _config(config_path, uniform=None, **overrides):
    if uniform:
        overrides["selection_mode"] = "uniform"
    return load_config(config_path, **overrides)


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose: int) -> None:
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_run_options
@click.option("--server", help="Submit the run to a running `frag serve` instead of running locally.")
def run(config_path, server, **kwargs):
    """Score, select and answer every question in the manifest."""
    try:
        cfg = _config(config_path, **kwargs)
    except (ValueError, ConfigError) as exc:
        raise click.ClickException(str(exc)) from exc

    if server:
        import httpx

        payload = json.loads(cfg.model_dump_json(exclude_none=True))
        resp = httpx.post(server.rstrip("/") + "/runs", json={"config": payload}, timeout=None)
        if resp.status_code != 200:
            raise click.ClickException(f"server returned {resp.status_code}: {resp.text}")
        report = resp.json()["report"]
        if cfg.out_dir is None:
            click.echo(json.dumps(report, indent=2, sort_keys=True))
        else:
            # the server already wrote to out_dir if it can see it
            click.echo(json.dumps(report["metrics"], indent=2))
        return

    try:
        report = Pipeline(cfg).run()
    except (ManifestError, ConfigError) as exc:
        raise click.ClickException(str(exc)) from exc
    summary = {k: v for k, v in report.metrics.items() if k != "per_question"}
    click.echo(json.dumps({"metrics": summary, "failures": report.failures, "aborted": report.aborted}, indent=2))
    if cfg.out_dir is None:
        click.echo(report.to_json())
    if report.aborted:
        sys.exit(2)


@main.command("sweep")
@_run_options
@click.option("--axis", type=click.Choice(["n", "k"]), required=True)
@click.option("--values", required=True, help="Comma-separated values, e.g. 64,128,256.")
def sweep_cmd(config_path, axis, values, **kwargs):
    """Repeat the run over several N (sampled) or K (selected) values."""
    try:
        parsed = [int(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--values") from exc
    if not parsed:
        raise click.BadParameter("no values given", param_hint="--values")
    try:
        cfg = _config(config_path, **kwargs)
        rows = sweep(cfg, axis, parsed)
    except (ValueError, ConfigError) as exc:
        raise click.ClickException(str(exc)) from exc
    if cfg.out_dir is not None:
        click.echo(f"wrote {write_sweep(rows, cfg.out_dir)}")
    else:
        click.echo(rows_to_csv(rows), nl=False)


@main.command("score-dump")
@click.option("--task", "task_id", required=True)
@click.option("--report", "report_path", type=click.Path(exists=True), help="Read scores from an existing run.")
@_run_options
def score_dump(task_id, report_path, config_path, **kwargs):
    """Print frame_index,score,selected for one task as CSV."""
    if report_path:
        data = load_report(report_path)
        match = [t for t in data["tasks"] if t["id"] == task_id]
        if not match:
            raise click.ClickException(f"task {task_id!r} not in report")
        trace = TaskTrace(**match[0])
    else:
        try:
            cfg = _config(config_path, **{**kwargs, "out_dir": None})
            if cfg.manifest is None:
                raise ConfigError("--manifest or --report is required")
            entries = [e for e in load_manifest(cfg.manifest, check_media=False) if e.task.id == task_id]
            if not entries:
                raise ConfigError(f"task {task_id!r} not in manifest")
            trace = Pipeline(cfg).run(entries).tasks[0]
        except (ValueError, ConfigError) as exc:
            raise click.ClickException(str(exc)) from exc
        if trace.status != "ok":
            raise click.ClickException(f"task {task_id} failed: {trace.error}")
    click.echo(trace.score_csv(), nl=False)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--mock", type=click.Path(exists=True), help="Serve this fixture at /v1/chat/completions.")
@click.option("--manifest", type=click.Path(exists=True), help="Index these media so the mock can identify frames.")
def serve(host, port, mock, manifest):
    """Start the HTTP service."""
    import uvicorn

    from frag.mock import MockBackend
    from frag.service import create_app
    from frag.service.app import index_manifest_images

    backend = None
    if mock:
        backend = MockBackend.from_file(mock, image_index=index_manifest_images(manifest) if manifest else None)
    uvicorn.run(create_app(backend), host=host, port=port)


if __name__ == "__main__":
    main()
