from .adversary import Adversary, Capability, CapabilityViolation
from .core import EventLoop, ServiceMetrics, TraceEntry
from .ratelimit import PerSourceLimiter, TokenBucket
from .scenarios import (
    SCENARIO_CAPABILITIES,
    SCENARIO_IDS,
    SCENARIO_TITLES,
    flood,
    run_matrix,
    run_scenario,
)
from .world import ScenarioConfig, ScenarioReport, World

__all__ = [
    "Adversary",
    "Capability",
    "CapabilityViolation",
    "EventLoop",
    "ServiceMetrics",
    "TraceEntry",
    "PerSourceLimiter",
    "TokenBucket",
    "SCENARIO_CAPABILITIES",
    "SCENARIO_IDS",
    "SCENARIO_TITLES",
    "flood",
    "run_matrix",
    "run_scenario",
    "ScenarioConfig",
    "ScenarioReport",
    "World",
]
