"""Error categories raised by the acoustic CWT toolkit."""

from typing import Optional, Tuple


class AcousticCWTError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class ParameterDomainError(AcousticCWTError, ValueError):
    """A parameter vector or argument lies outside its domain."""

    category = "parameter-domain"


class AdmissibilityError(ParameterDomainError):
    """The admissibility constant is not finite and positive (needs kappa*nu > 1/2)."""

    category = "admissibility"


class RangeOverflowError(AcousticCWTError, OverflowError):
    """A gamma-function based constant overflowed double precision."""

    category = "range"


class UnsupportedParametersError(AcousticCWTError):
    """The structure equations are only available for nu = c = 1."""

    category = "unsupported-parameters"


class IntegrationError(AcousticCWTError):
    """Per-interval quadrature did not converge."""

    category = "integration"

    def __init__(self, message: str, t: Optional[float] = None,
                 interval: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.t = t
        self.interval = interval


class UndefinedScoreError(AcousticCWTError):
    """Causality score requested for an all-zero wavelet."""

    category = "undefined-score"


class ConfigurationError(AcousticCWTError):
    """Wavelet bank, settings or config file do not fit together."""

    category = "configuration"


class ShapeError(AcousticCWTError):
    """A grid axis is too short for the requested operation."""

    category = "shape"


class SignalInputError(AcousticCWTError, ValueError):
    """Input signal is unusable (too short, no local maximum, ...)."""

    category = "input"


class AliasingError(SignalInputError):
    """Requested frequency is at or above the Nyquist frequency."""

    category = "aliasing"


class UndefinedCorrelationError(AcousticCWTError, ValueError):
    """Pearson correlation of a constant array."""

    category = "undefined-correlation"


class WavFormatError(AcousticCWTError):
    """WAV file is not 16-bit PCM mono, or its header is malformed."""

    category = "format"

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class ObjectiveError(AcousticCWTError):
    """The calibration objective could not be evaluated."""

    category = "objective"
