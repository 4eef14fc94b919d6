"""Punitive supplier pricing against misreported market potential."""
from .errors import AssumptionError, ConfigError, ModelError, PolicyError, PunitiveError
from .market import MarketModel, example_one, example_two, sbe_dynamic, sbe_single
from .misreport import ReportPolicy, identity_policy, validate
from .sim import PunitiveSpec, SimConfig, replicate, run

__version__ = "0.1.0"

__all__ = [
    "AssumptionError", "ConfigError", "MarketModel", "ModelError", "PolicyError",
    "PunitiveError", "PunitiveSpec", "ReportPolicy", "SimConfig", "example_one",
    "example_two", "identity_policy", "replicate", "run", "sbe_dynamic", "sbe_single",
    "validate",
]
