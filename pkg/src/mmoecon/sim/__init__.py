"""Simulation loop, configuration, trace output and summaries."""

from .config import BACKENDS, ConfigError, SimConfig, load_config, make_config
from .resolver import ApplyResult, apply_action
from .runner import Simulation, run, run_repetition
from .state import SimState
from .summarize import MissingRuns, summarize
from .trace import EVENT_KINDS, TraceWriter, read_trace

__all__ = [
    "BACKENDS", "ConfigError", "SimConfig", "load_config", "make_config", "ApplyResult",
    "apply_action", "Simulation", "run", "run_repetition", "SimState", "MissingRuns",
    "summarize", "EVENT_KINDS", "TraceWriter", "read_trace",
]
