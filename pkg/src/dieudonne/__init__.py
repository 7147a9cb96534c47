"""Exact arithmetic for O-graded Dieudonne modules and displays over finite fields."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapabilityError,
    DieudonneError,
    InvalidModuleError,
    NotDivisibleError,
    ParameterError,
    PrecisionError,
)

__all__ = [
    "__version__",
    "CapabilityError",
    "DieudonneError",
    "InvalidModuleError",
    "NotDivisibleError",
    "ParameterError",
    "PrecisionError",
]
