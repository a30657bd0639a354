"""Scenario configuration, simulation loop and metrics."""

from .config import (
    ConfigError,
    ScenarioConfig,
    bundled_scenarios,
    config_from_dict,
    load_config,
    read_raw,
    resolve_scenario,
)
from .metrics import (
    amplitude,
    bound_report,
    compute_metrics,
    read_metrics,
    string_stability_gain,
    write_metrics,
)
from .profiles import LeaderProfile, profile_from_dict
from .sim import SimLog, SimulationAborted, log_meta, run_scenario

__all__ = [
    "ConfigError", "ScenarioConfig", "bundled_scenarios", "config_from_dict", "load_config",
    "read_raw", "resolve_scenario",
    "amplitude", "bound_report", "compute_metrics", "read_metrics", "string_stability_gain",
    "write_metrics", "LeaderProfile", "profile_from_dict", "SimLog", "SimulationAborted",
    "log_meta", "run_scenario",
]
