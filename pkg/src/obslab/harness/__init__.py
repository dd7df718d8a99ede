"""Scenario configuration, simulation, metrics, persistence and the CLI."""

from .config import ConfigError, ScenarioConfig, dump_scenario, load_scenario, parse_scenario
from .io import read_trace, write_outputs
from .metrics import MetricReport, chattering_index, compute_metrics, rmse
from .presets import get_preset, preset_names
from .simulate import run_scenario

__all__ = [
    "ConfigError", "ScenarioConfig", "MetricReport", "chattering_index", "compute_metrics", "dump_scenario",
    "get_preset", "load_scenario", "parse_scenario", "preset_names", "read_trace", "rmse", "run_scenario",
    "write_outputs",
]
