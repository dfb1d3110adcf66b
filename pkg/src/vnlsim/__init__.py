"""Discrete-event simulator of VNL proxy-relay handover for NetInf mobile nodes."""
from .engine import World, run_scenario
from .metrics import Metrics, compute_metrics, emit, read_trace
from .scenario import Scenario, ScenarioError, load_scenario

__all__ = [
    "Metrics",
    "Scenario",
    "ScenarioError",
    "World",
    "compute_metrics",
    "emit",
    "load_scenario",
    "read_trace",
    "run_scenario",
]
__version__ = "0.1.0"
