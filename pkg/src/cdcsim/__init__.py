"""Content-delivery cloudlet placement and cooperative edge caching simulator."""

from .config import SimConfig
from .engine import MetricsSeries, build_scenario, route_request, run, simulate
from .errors import ParseError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "SimConfig",
    "MetricsSeries",
    "build_scenario",
    "route_request",
    "run",
    "simulate",
    "ParseError",
    "ValidationError",
    "__version__",
]
