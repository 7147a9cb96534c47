"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so keep the split between numerical
failure (precision) and mathematical failure (invalid input) intact.
"""


class DieudonneError(Exception):
    """Base class for every library error."""


class ParameterError(DieudonneError, ValueError):
    """Operands live in different rings or have incompatible shapes."""


class PrecisionError(DieudonneError):
    """The requested quantity is not determined at the working precision."""


class InvalidModuleError(DieudonneError):
    """Input data violates a structural axiom (FV = p, pM in VM, divisibility)."""


class NotDivisibleError(InvalidModuleError):
    """An exact division by p was requested on a non-multiple of p."""


class CapabilityError(DieudonneError):
    """Request exceeds a documented complexity guard."""
