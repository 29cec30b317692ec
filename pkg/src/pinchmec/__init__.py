"""Pinching-antenna wireless-powered MEC capacity simulator."""

from .channel import PaLayout
from .errors import ConfigurationError, InfeasibleError
from .orchestrator import SchemeId, init_solution, run_alternating, run_baseline, run_scheme
from .scenario import ChannelConstants, DeviceLayout, ScenarioConfig, derive_constants, sample_devices
from .system_model import RadiationVector, ResourceAllocation, SolutionState

__all__ = [
    "ChannelConstants",
    "ConfigurationError",
    "DeviceLayout",
    "InfeasibleError",
    "PaLayout",
    "RadiationVector",
    "ResourceAllocation",
    "ScenarioConfig",
    "SchemeId",
    "SolutionState",
    "derive_constants",
    "init_solution",
    "run_alternating",
    "run_baseline",
    "run_scheme",
    "sample_devices",
]

__version__ = "0.1.0"
