"""
Frequency-domain definition of the Reimann wavelet family.

The family is defined by

    h(y) = k exp(i phi(y)) exp(-kappa |y|^c / c) |y|^(kappa nu - 1/2),   y = s omega / omega0

with a log-linear phase phi(y) that has its maximum phi_m at y_m = alpha / beta.
Everything here is closed form: phase variants, the spectrum, the normalization
constants, the admissibility constant and the tonotopic scale grid.
"""

import logging
import math
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Dict, Union

import numpy as np
from dotenv import dotenv_values, set_key
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import integrate, special

from .errors import AdmissibilityError, ParameterDomainError, RangeOverflowError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Largest argument for which exp() stays finite in double precision
_LOG_DOUBLE_MAX = math.log(np.finfo(float).max)

ArrayLike = Union[float, np.ndarray]


class PhaseVariant(str, Enum):
    RAW = "raw"
    KINK_FREE = "kink_free"


class WaveletKind(str, Enum):
    REAL_WAVELET = "real_wavelet"
    HOLOMORPHIC = "holomorphic"


# Keys of the flat parameter file
PARAM_FILE_KEYS = ("alpha_over_pi", "beta_over_pi", "phi_m_over_pi", "kappa", "nu", "c", "f0_hz")


class WaveletParams(BaseModel):
    """Immutable parameter vector (alpha, beta, phi_m, kappa, nu, c, omega0) with cached derived constants."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)
    phi_m: float
    kappa: float = Field(gt=0)
    nu: float = Field(default=1.0, gt=0)
    c_exp: float = Field(default=1.0, gt=0)
    omega0: float = Field(default=TWO_PI * 880.0, gt=0)

    @model_validator(mode="after")
    def _check_admissible(self) -> "WaveletParams":
        if self.kappa * self.nu <= 0.5:
            raise ValueError(f"kappa*nu must exceed 1/2 (got {self.kappa * self.nu:.6g})")
        for name in ("alpha", "beta", "phi_m", "kappa", "nu", "c_exp", "omega0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self

    def model_post_init(self, __context) -> None:
        # Derived constants are evaluated eagerly so that range problems surface at construction
        _ = (self.k_real, self.k_holomorphic, self.c_psi2, self.y_m, self.y_t, self.epsilon)

    # -- derived constants -------------------------------------------------

    @cached_property
    def y_m(self) -> float:
        """Location of the phase maximum."""
        return self.alpha / self.beta

    @cached_property
    def y_t(self) -> float:
        """Tangent point of the line through the origin."""
        return self.y_m * math.exp(-self.phi_m / self.alpha)

    @cached_property
    def epsilon(self) -> float:
        return self.phi_m - self.alpha * (math.log(self.y_m) - 1.0)

    @cached_property
    def tangent_slope(self) -> float:
        """Slope of the tangent line through the origin, beta (exp(phi_m/alpha) - 1)."""
        return self.beta * (math.exp(self.phi_m / self.alpha) - 1.0)

    @cached_property
    def k_real(self) -> float:
        return normalization_k(self, WaveletKind.REAL_WAVELET)

    @cached_property
    def k_holomorphic(self) -> float:
        return normalization_k(self, WaveletKind.HOLOMORPHIC)

    @cached_property
    def c_psi2(self) -> float:
        return admissibility(self)

    @property
    def f0_hz(self) -> float:
        return self.omega0 / TWO_PI

    def k(self, kind: "WaveletKind") -> float:
        return self.k_real if WaveletKind(kind) == WaveletKind.REAL_WAVELET else self.k_holomorphic

    # -- construction helpers ----------------------------------------------

    @classmethod
    def from_pi_scaled(cls, alpha_over_pi: float, beta_over_pi: float, phi_m_over_pi: float,
                       kappa: float, nu: float = 1.0, c: float = 1.0, f0_hz: float = 880.0) -> "WaveletParams":
        """Build a vector from the pi-scaled presentation used in the parameter files."""
        return cls(alpha=alpha_over_pi * math.pi, beta=beta_over_pi * math.pi,
                   phi_m=phi_m_over_pi * math.pi, kappa=kappa, nu=nu, c_exp=c,
                   omega0=TWO_PI * f0_hz)

    def to_pi_scaled(self) -> Dict[str, float]:
        return {
            "alpha_over_pi": self.alpha / math.pi,
            "beta_over_pi": self.beta / math.pi,
            "phi_m_over_pi": self.phi_m / math.pi,
            "kappa": self.kappa,
            "nu": self.nu,
            "c": self.c_exp,
            "f0_hz": self.f0_hz,
        }

    @classmethod
    def from_config(cls, section: Dict[str, object]) -> "WaveletParams":
        """Build from a config section with pi-scaled keys (extra keys are ignored)."""
        try:
            values = {key: float(section[key]) for key in PARAM_FILE_KEYS if key in section}
            return cls.from_pi_scaled(**values)
        except (TypeError, ValueError, ValidationError) as e:
            raise ParameterDomainError(f"Invalid wavelet parameters: {e}") from e

    @classmethod
    def from_config_file(cls, path: Union[str, Path]) -> "WaveletParams":
        """Read a flat KEY=VALUE parameter file."""
        path = Path(path)
        if not path.exists():
            raise ParameterDomainError(f"Parameter file not found: {path}")
        values = dotenv_values(path)
        missing = [key for key in PARAM_FILE_KEYS[:4] if key not in values]
        if missing:
            raise ParameterDomainError(f"Parameter file {path} lacks keys: {', '.join(missing)}")
        logger.debug(f"Loaded wavelet parameters from {path}")
        return cls.from_config(values)

    def to_config_file(self, path: Union[str, Path]) -> Path:
        """Write the vector as a flat KEY=VALUE file (pi-scaled)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.touch(exist_ok=True)
        for key, value in self.to_pi_scaled().items():
            set_key(str(path), key, repr(float(value)), quote_mode="never")
        return path

    def replace(self, **changes: float) -> "WaveletParams":
        """Return a new validated vector with some fields changed."""
        values = self.model_dump()
        values.update(changes)
        return type(self)(**values)


class TonotopicMap(BaseModel):
    """Exponential frequency-position map xi(x) = omega_max exp(-gamma x) on x in [0, 1]."""

    model_config = ConfigDict(frozen=True)

    omega_max: float = Field(default=TWO_PI * 20000.0, gt=0)
    omega_min: float = Field(default=TWO_PI * 60.0, gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "TonotopicMap":
        if self.omega_min >= self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        return self

    @property
    def gamma(self) -> float:
        return math.log(self.omega_max / self.omega_min)

    @property
    def octaves(self) -> float:
        return self.gamma / math.log(2.0)

    @classmethod
    def from_hz(cls, f_max_hz: float, f_min_hz: float) -> "TonotopicMap":
        return cls(omega_max=TWO_PI * f_max_hz, omega_min=TWO_PI * f_min_hz)

    @classmethod
    def from_config(cls, section: Dict[str, object]) -> "TonotopicMap":
        try:
            return cls.from_hz(float(section["f_max_hz"]), float(section["f_min_hz"]))
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise ParameterDomainError(f"Invalid tonotopic map: {e}") from e


# -- phase ---------------------------------------------------------------------

def _raw_phase_positive(y: np.ndarray, p: WaveletParams) -> np.ndarray:
    ratio = y / p.y_m
    return p.phi_m + p.alpha * (np.log(ratio) + 1.0 - ratio)


def phase(y: ArrayLike, p: WaveletParams, variant: PhaseVariant = PhaseVariant.KINK_FREE) -> ArrayLike:
    """
    Antisymmetric phase phi(y).

    RAW follows the log-linear form for |y| > 0 and returns 0 at y = 0 (a convention:
    the form itself is undefined there). KINK_FREE replaces it by its tangent through
    the origin for |y| <= y_t.
    """
    variant = PhaseVariant(variant)
    y_arr = np.asarray(y, dtype=float)
    a = np.abs(y_arr)
    out = np.zeros_like(a)
    positive = a > 0
    if variant == PhaseVariant.RAW:
        out[positive] = _raw_phase_positive(a[positive], p)
    else:
        linear = a <= p.y_t
        out[linear] = p.tangent_slope * a[linear]
        upper = ~linear
        out[upper] = _raw_phase_positive(a[upper], p)
    out = np.sign(y_arr) * out
    return float(out) if np.ndim(y) == 0 else out


def phase_derivative(y: ArrayLike, p: WaveletParams, variant: PhaseVariant = PhaseVariant.KINK_FREE) -> ArrayLike:
    """d phi / dy (an even function of y); the RAW form diverges at 0 and is reported as +inf there."""
    variant = PhaseVariant(variant)
    a = np.abs(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore"):
        out = p.alpha / a - p.beta
    if variant == PhaseVariant.KINK_FREE:
        out = np.where(a <= p.y_t, p.tangent_slope, out)
    return float(out) if np.ndim(y) == 0 else out


def phase_curve(p: WaveletParams, y_max: float = 1.0, n: int = 501) -> Dict[str, np.ndarray]:
    """Raw phase, kink-free phase and the tangent line on y in [0, y_max]."""
    if y_max <= 0 or n < 2:
        raise ParameterDomainError(f"Phase curve needs y_max > 0 and n >= 2 (got {y_max}, {n})")
    y = np.linspace(0.0, y_max, n)
    return {
        "y": y,
        "raw": phase(y, p, PhaseVariant.RAW),
        "kink_free": phase(y, p, PhaseVariant.KINK_FREE),
        "tangent": p.tangent_slope * y,
    }


# -- spectrum and constants ------------------------------------------------------

def log_envelope(y: ArrayLike, p: WaveletParams) -> ArrayLike:
    """ln of exp(-kappa |y|^c / c) |y|^(kappa nu - 1/2); -inf at y = 0."""
    a = np.abs(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore"):
        return -p.kappa * a ** p.c_exp / p.c_exp + (p.kappa * p.nu - 0.5) * np.log(a)


def spectrum(s: float, omega: ArrayLike, p: WaveletParams,
             variant: PhaseVariant = PhaseVariant.KINK_FREE,
             kind: WaveletKind = WaveletKind.REAL_WAVELET) -> ArrayLike:
    """
    h(s omega) = (k / omega0^(kappa nu)) exp(i phi(y)) exp(-(kappa/c)|y|^c) |s omega|^(kappa nu - 1/2).

    Evaluated in log form: |h| = k omega0^(-1/2) |y|^(kappa nu - 1/2) exp(-(kappa/c)|y|^c).
    """
    if s <= 0:
        raise ParameterDomainError(f"Scale must be positive (got {s})")
    y = s * np.asarray(omega, dtype=float) / p.omega0
    log_mod = math.log(p.k(kind)) - 0.5 * math.log(p.omega0) + log_envelope(y, p)
    modulus = np.exp(log_mod)
    out = modulus * np.exp(1j * phase(y, p, variant))
    return complex(out) if np.ndim(omega) == 0 else out


def envelope_mode(p: WaveletParams) -> float:
    """Mode |y_e| = (nu - 1/(2 kappa))^(1/c) of the spectral envelope."""
    return (p.nu - 1.0 / (2.0 * p.kappa)) ** (1.0 / p.c_exp)


def normalization_k(p: WaveletParams, kind: WaveletKind = WaveletKind.REAL_WAVELET) -> float:
    """
    Absolute normalization giving unit wavelet energy.

    real_wavelet: (2 kappa/c)^(kappa nu/c) sqrt(c pi / Gamma(2 kappa nu / c))
    holomorphic:  (2 kappa/c)^(kappa nu/c) sqrt(2 pi c / Gamma(2 kappa nu / c))
    """
    kn = p.kappa * p.nu
    if kn <= 0.5:
        raise AdmissibilityError(f"kappa*nu must exceed 1/2 (got {kn:.6g})")
    factor = math.pi if WaveletKind(kind) == WaveletKind.REAL_WAVELET else 2.0 * math.pi
    log_k = (kn / p.c_exp) * math.log(2.0 * p.kappa / p.c_exp) \
        + 0.5 * (math.log(factor * p.c_exp) - special.gammaln(2.0 * kn / p.c_exp))
    if not math.isfinite(log_k) or log_k > _LOG_DOUBLE_MAX:
        raise RangeOverflowError(f"Normalization constant overflows for kappa*nu/c = {kn / p.c_exp:.6g}")
    return math.exp(log_k)


def admissibility(p: WaveletParams) -> float:
    """
    Admissibility constant c_psi^2 in seconds:

        (2 pi / omega0) (2 kappa / c)^(1/c) Gamma((2 kappa nu - 1)/c) / Gamma(2 kappa nu / c)
    """
    kn = p.kappa * p.nu
    if kn <= 0.5 or p.c_exp <= 0:
        raise AdmissibilityError(f"Admissibility needs kappa*nu > 1/2 and c > 0 (got kappa*nu={kn:.6g}, c={p.c_exp})")
    log_ratio = special.gammaln((2.0 * kn - 1.0) / p.c_exp) - special.gammaln(2.0 * kn / p.c_exp)
    log_value = math.log(TWO_PI / p.omega0) + math.log(2.0 * p.kappa / p.c_exp) / p.c_exp + log_ratio
    if log_value > _LOG_DOUBLE_MAX:
        raise RangeOverflowError("Admissibility constant overflows")
    value = math.exp(log_value)
    if not (0.0 < value < math.inf):
        raise AdmissibilityError(f"Admissibility constant is not finite and positive: {value}")
    return value


def envelope_moment(p: WaveletParams) -> float:
    """Numerical <|y|^c> under |h|^2; equals nu for every valid vector."""
    def weight(y: float) -> float:
        return math.exp(2.0 * float(log_envelope(y, p)) - 2.0 * float(log_envelope(envelope_mode(p), p)))

    upper = max(50.0, 40.0 * envelope_mode(p))
    num, _ = integrate.quad(lambda y: y ** p.c_exp * weight(y), 0.0, upper, limit=200)
    den, _ = integrate.quad(weight, 0.0, upper, limit=200)
    return num / den


# -- tonotopic grid --------------------------------------------------------------

def tonotopic(x: ArrayLike, tmap: TonotopicMap = TonotopicMap()) -> ArrayLike:
    """xi(x) = omega_max exp(-gamma x) for x in [0, 1]."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0) or np.any(x_arr > 1.0) or np.any(~np.isfinite(x_arr)):
        raise ParameterDomainError(f"Tonotopic position must lie in [0, 1] (got {x})")
    out = tmap.omega_max * np.exp(-tmap.gamma * x_arr)
    return float(out) if np.ndim(x) == 0 else out


def scale_grid(tmap: TonotopicMap, p: WaveletParams, segments: int) -> np.ndarray:
    """Log-uniform scales s_j = omega0 / xi(j / segments), j = 0..segments (increasing)."""
    if segments < 1:
        raise ParameterDomainError(f"segments must be >= 1 (got {segments})")
    j = np.arange(segments + 1, dtype=float)
    return p.omega0 / (tmap.omega_max * np.exp(-tmap.gamma * j / segments))


def scale_ratio(tmap: TonotopicMap, segments: int) -> float:
    """Constant ratio between successive grid scales."""
    return math.exp(tmap.gamma / segments)
