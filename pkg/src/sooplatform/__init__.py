"""Event-sourced engine that grows a set of objectives from micro-questions."""

from .engine import Platform
from .policy import AggregationPolicy

__all__ = ["Platform", "AggregationPolicy"]
__version__ = "0.1.0"
