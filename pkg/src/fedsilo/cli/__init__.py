"""Experiment runner: configs, data generation, runs and reports."""
from .config import ExperimentConfig, UsageError, build_config, default_config, load_config
from .main import main
from .report import build_report
from .runner import SeedResult, gen_data, load_data, make_data, run_all, run_seed, summarize, write_run_outputs

__all__ = [
    "ExperimentConfig",
    "SeedResult",
    "UsageError",
    "build_config",
    "build_report",
    "default_config",
    "gen_data",
    "load_config",
    "load_data",
    "main",
    "make_data",
    "run_all",
    "run_seed",
    "summarize",
    "write_run_outputs",
]
