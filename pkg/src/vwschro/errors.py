"""Exception types shared across the package."""


class VwschroError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(VwschroError, ValueError):
    """Invalid construction parameters (radii, orders, grid sizes)."""


class RangeError(VwschroError, ValueError):
    """Query outside the tabulated range of a Fourier table."""


class UnsupportedVariantError(VwschroError, TypeError):
    """Operation is not defined for this distribution variant."""


class ScaleDomainError(VwschroError, ValueError):
    """Scale evaluated where an iterated logarithm is not positive."""


class HypothesisViolationError(VwschroError, ValueError):
    """Input data violate a stated solver hypothesis."""


class SizeGuardError(VwschroError, MemoryError):
    """Dense symbol request exceeds the configured memory guard."""


class NumericalBlowupError(VwschroError, FloatingPointError):
    """Non-finite values appeared during time stepping.

    Carries the simulation time at which the blow-up was detected.
    """

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class InfeasibleParametersError(VwschroError, ValueError):
    """Requested (M, h) pair cannot be realized on the given lattice."""


class NotInvertibleError(VwschroError, ValueError):
    """Composition residual is not a contraction at these parameters."""


class InsufficientDataError(VwschroError, ValueError):
    """Too few net points for the requested fit."""


class ConfigError(VwschroError, ValueError):
    """Config parse or validation failure; carries all collected messages."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
