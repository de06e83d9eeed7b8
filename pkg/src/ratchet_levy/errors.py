"""Exception hierarchy shared across the package."""


class RatchetLevyError(Exception):
    """Base class for all package errors."""


class InvalidParameter(RatchetLevyError, ValueError):
    """A model, strategy or evaluation argument violates its invariant."""


class InvalidRegion(InvalidParameter):
    """Initial surplus outside the region a region-specific formula covers."""


class InvalidStrategy(InvalidParameter):
    """Barrier/rate combination that the formulas do not cover."""


class ConfigError(InvalidParameter):
    """Simulation or CLI configuration breaks an invariant."""


class NumericalError(RatchetLevyError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class NoRoot(NumericalError):
    """Root of the Laplace exponent equation does not exist or was not found."""


class QuadratureFailure(NumericalError):
    """Adaptive quadrature did not meet its tolerance."""


class InversionFailure(NumericalError):
    """Numerical Laplace inversion did not converge."""


class BackendUnavailable(RatchetLevyError):
    """Requested scale-function backend cannot represent the model."""
