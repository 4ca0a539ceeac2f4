"""Experiment configuration, drivers and data emission."""
from .config import ExperimentConfig, default_paper_scenario, dump, load, parse, serialize, validate
from .output import emit_csv, emit_ensemble_csv
from .runner import EnsembleResult, RunOutput, envelope_slack, run_ensemble, run_single
