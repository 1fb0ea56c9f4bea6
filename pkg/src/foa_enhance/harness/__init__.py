"""Batch driver: manifests, synthetic fixtures, evaluation and reports."""
from .config import PIPELINES, ConfigError, RunConfig, SynthConfig, load_config
from .evaluate import EvalReport, Record, aggregate, run_eval
from .manifest import ManifestEntry, ManifestError, load_manifest, parse_manifest
from .report import CSV_COLUMNS, emit_report, load_report
from .synth import synth_fixtures

__all__ = [
    "CSV_COLUMNS", "PIPELINES", "ConfigError", "EvalReport", "ManifestEntry", "ManifestError",
    "Record", "RunConfig", "SynthConfig", "aggregate", "emit_report", "load_config",
    "load_manifest", "load_report", "parse_manifest", "run_eval", "synth_fixtures",
]
