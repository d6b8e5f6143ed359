"""Agent-based simulation of an MMO game economy.

Players with behavioural profiles gather resources on a grid, upgrade,
recharge real currency into tokens and trade materials through a double
auction or private negotiation. Decisions come from pluggable backends.
"""

from .actions import ActionKind, StructuredAction
from .sim import SimConfig, Simulation, load_config, make_config, run, summarize

__version__ = "0.1.0"

__all__ = [
    "ActionKind", "StructuredAction", "SimConfig", "Simulation", "load_config", "make_config",
    "run", "summarize", "__version__",
]
