"""Dividend values and ruin transforms for a mixed ratcheting-periodic strategy
on a spectrally negative Levy surplus."""
from .errors import (
    BackendUnavailable,
    ConfigError,
    InvalidParameter,
    InvalidRegion,
    InvalidStrategy,
    InversionFailure,
    NoRoot,
    NumericalError,
    QuadratureFailure,
    RatchetLevyError,
)
from .models import LevyModel, ModelKind, laplace_exponent, phi_root
from .ruin import RuinTransform, laplace_ruin, laplace_ruin_ratchet_only
from .scale import Backend, ScaleKit
from .valuation import (
    Region,
    Strategy,
    ValuationResult,
    value,
    value_lower,
    value_middle,
    value_periodic_only,
    value_ratchet_only,
    value_upper,
)

__version__ = "0.1.0"
