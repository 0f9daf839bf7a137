"""Quadratic traveling salesperson benchmarks, exact and anytime DP solvers, and model exporters."""

from .errors import (
    DegenerateGeometryError,
    InconsistentDataError,
    InvalidArgumentError,
    InvalidTourError,
    ParseError,
    QtspError,
    SizeGuardError,
)
from .instance import Instance, Tour, generate_instance, tour_cost, validate_tour

__version__ = "0.1.0"

__all__ = [
    "DegenerateGeometryError",
    "InconsistentDataError",
    "Instance",
    "InvalidArgumentError",
    "InvalidTourError",
    "ParseError",
    "QtspError",
    "SizeGuardError",
    "Tour",
    "generate_instance",
    "tour_cost",
    "validate_tour",
]
