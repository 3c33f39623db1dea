from frag.harness.cache import ScoreCache, score_key
from frag.harness.config import BackendConfig, RunConfig, load_config
from frag.harness.manifest import ManifestEntry, ManifestError, load_manifest
from frag.harness.pipeline import Pipeline, RunReport, TaskTrace, run_pipeline
from frag.harness.sweep import SweepRow, rows_to_csv, sweep

__all__ = [
    "BackendConfig",
    "ManifestEntry",
    "ManifestError",
    "Pipeline",
    "RunConfig",
    "RunReport",
    "ScoreCache",
    "SweepRow",
    "TaskTrace",
    "load_config",
    "load_manifest",
    "rows_to_csv",
    "run_pipeline",
    "score_key",
    "sweep",
]
