"""
Time-domain synthesis of the Reimann wavelet by oscillatory quadrature.

The inverse Fourier integral

    I(u) = int_0^omega_c exp(i (omega u - phi(s omega / omega0))) E(s omega / omega0) d omega

is split at the zeros of cos(omega u - phi(...)), at a uniform partition of
(0, omega_c] and, for the kink-free phase, at the tangent point y_t. Every interval is integrated by Gauss-Legendre twice (one panel and
two half panels); a disagreement above the relative tolerance is an error.

All rows (sample times) of one scale are processed together, chunk by chunk.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy import optimize

from .errors import IntegrationError, ParameterDomainError, UndefinedScoreError
from .wavelet_model import (
    PhaseVariant,
    WaveletKind,
    WaveletParams,
    envelope_mode,
    log_envelope,
    phase,
)

logger = logging.getLogger(__name__)

# Rows (sample times) integrated together
_ROW_CHUNK = 64
# Intervals evaluated per vectorized Gauss-Legendre block
_INTERVAL_BLOCK = 16384
# Geometric sub-intervals toward omega = 0 inside the first uniform segment
_GRADED_SPLITS = 12


@dataclass(frozen=True)
class QuadratureSettings:
    cutoff_fraction: float = 1e-6
    order: int = 16
    relative_tolerance: float = 1e-8
    uniform_segments: int = 64
    root_tolerance: float = 1e-3

    @classmethod
    def from_config(cls, section: Dict[str, object]) -> "QuadratureSettings":
        return cls(
            cutoff_fraction=float(section.get("cutoff_fraction", cls.cutoff_fraction)),
            order=int(section.get("quadrature_order", cls.order)),
            relative_tolerance=float(section.get("relative_tolerance", cls.relative_tolerance)),
            uniform_segments=int(section.get("uniform_segments", cls.uniform_segments)),
            root_tolerance=float(section.get("root_tolerance", cls.root_tolerance)),
        )

    def as_dict(self) -> Dict[str, float]:
        return {
            "cutoff_fraction": self.cutoff_fraction,
            "order": self.order,
            "relative_tolerance": self.relative_tolerance,
            "uniform_segments": self.uniform_segments,
            "root_tolerance": self.root_tolerance,
        }


@dataclass(frozen=True)
class IntegrationPlan:
    """Cutoff and oscillation zeros for one (scale, t - tau) pair."""

    omega_c: float
    roots: np.ndarray
    order: int
    uniform_segments: int
    kink: Optional[float] = None

    @property
    def breakpoints(self) -> np.ndarray:
        uniform = np.linspace(0.0, self.omega_c, self.uniform_segments + 1)
        extra = [self.kink] if self.kink is not None else []
        return np.unique(np.concatenate([uniform, self.roots, extra]))


@dataclass
class SampledWavelet:
    """Wavelet samples psi_{s tau}(t) on a time grid."""

    times: np.ndarray
    values: np.ndarray
    scale: float
    shift: float
    kind: WaveletKind
    variant: PhaseVariant
    metadata: Dict[str, float] = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def energy(self) -> float:
        """Riemann-sum energy sum |psi|^2 dt."""
        return float(np.sum(np.abs(self.values) ** 2) * self.dt)

    @property
    def real(self) -> np.ndarray:
        return np.real(self.values)


# -- cutoff -----------------------------------------------------------------------

@lru_cache(maxsize=256)
def _cutoff_y(p: WaveletParams, fraction: float) -> float:
    """y_c > y_e where the envelope drops to `fraction` of its peak (scale independent)."""
    if not 0.0 < fraction < 1.0:
        raise ParameterDomainError(f"Cutoff fraction must lie in (0, 1) (got {fraction})")
    y_e = envelope_mode(p)
    peak = float(log_envelope(y_e, p))
    target = math.log(fraction)

    def excess(y: float) -> float:
        return float(log_envelope(y, p)) - peak - target

    hi = 2.0 * y_e + 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
    return optimize.bisect(excess, y_e, hi, xtol=1e-12, rtol=1e-12)


def cutoff_frequency(s: float, p: WaveletParams, fraction: float = 1e-6) -> float:
    """Angular frequency above the envelope peak where the envelope falls to `fraction` of it."""
    if s <= 0:
        raise ParameterDomainError(f"Scale must be positive (got {s})")
    return _cutoff_y(p, fraction) * p.omega0 / s


def _phase_rate_bound(p: WaveletParams, variant: PhaseVariant, y_c: float, segments: int) -> float:
    """Upper bound of |d phi / dy| over the scanned range."""
    if PhaseVariant(variant) == PhaseVariant.KINK_FREE:
        return max(p.beta, abs(p.tangent_slope))
    # RAW diverges at 0; roots below the first uniform node are not tracked
    return p.beta + p.alpha * segments / y_c


def phase_kink(s: float, p: WaveletParams, variant: PhaseVariant, omega_c: float) -> Optional[float]:
    """Angular frequency of the tangent point y_t for KINK_FREE, if it lies inside (0, omega_c)."""
    if PhaseVariant(variant) != PhaseVariant.KINK_FREE:
        return None
    omega_t = p.y_t * p.omega0 / s
    return omega_t if 0.0 < omega_t < omega_c else None


def _fixed_breakpoints(omega_c: float, segments: int, kink: Optional[float] = None) -> np.ndarray:
    uniform = np.linspace(0.0, omega_c, segments + 1)
    graded = uniform[1] * 0.5 ** np.arange(_GRADED_SPLITS, 0, -1)
    points = np.concatenate([uniform[:1], graded, uniform[1:]])
    if kink is not None:
        # second derivative of the phase jumps here
        points = np.unique(np.append(points, kink))
    return points


# -- root finding -------------------------------------------------------------------

def _find_roots(u: np.ndarray, s: float, p: WaveletParams, variant: PhaseVariant,
                omega_c: float, rate: float, tolerance: float) -> Tuple[np.ndarray, np.ndarray]:
    """Zeros of cos(omega u - phi) on (0, omega_c) for every row; returns (row index, omega)."""
    speed = float(np.max(np.abs(u))) + s * rate / p.omega0
    step = 0.5 * math.pi / speed
    grid = np.linspace(0.0, omega_c, int(math.ceil(omega_c / step)) + 1)
    phi = phase(s * grid / p.omega0, p, variant)
    argument = u[:, None] * grid[None, :] - phi[None, :]
    level_index = np.floor((argument - 0.5 * math.pi) / math.pi)
    rows, cols = np.nonzero(level_index[:, 1:] != level_index[:, :-1])
    if rows.size == 0:
        return rows, np.empty(0)

    level = 0.5 * math.pi + math.pi * np.maximum(level_index[rows, cols], level_index[rows, cols + 1])
    lo = grid[cols]
    hi = grid[cols + 1]
    g_lo = argument[rows, cols] - level
    u_rows = u[rows]
    # Bracket width is a quarter period; halve until below tolerance of a period
    iterations = max(4, int(math.ceil(math.log2(1.0 / (4.0 * tolerance)))) + 2)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        g_mid = u_rows * mid - phase(s * mid / p.omega0, p, variant) - level
        same = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(same, mid, lo)
        g_lo = np.where(same, g_mid, g_lo)
        hi = np.where(same, hi, mid)
    return rows, 0.5 * (lo + hi)


# -- quadrature ----------------------------------------------------------------------

def _integrand(omega: np.ndarray, u: np.ndarray, s: float, p: WaveletParams,
               variant: PhaseVariant) -> np.ndarray:
    y = s * omega / p.omega0
    return np.exp(log_envelope(y, p) + 1j * (u[:, None] * omega - phase(y, p, variant)))


def _gauss_pair(a: np.ndarray, b: np.ndarray, u: np.ndarray, s: float, p: WaveletParams,
                variant: PhaseVariant, nodes: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    coarse = half * (_integrand(mid[:, None] + half[:, None] * nodes, u, s, p, variant) @ weights)
    quarter = 0.5 * half
    left = _integrand((a + quarter)[:, None] + quarter[:, None] * nodes, u, s, p, variant) @ weights
    right = _integrand((mid + quarter)[:, None] + quarter[:, None] * nodes, u, s, p, variant) @ weights
    return coarse, quarter * (left + right)


def _integrate_chunk(u: np.ndarray, s: float, p: WaveletParams, variant: PhaseVariant,
                     settings: QuadratureSettings, omega_c: float, rate: float,
                     fixed: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    root_rows, root_vals = _find_roots(u, s, p, variant, omega_c, rate, settings.root_tolerance)

    n_rows = u.size
    all_rows = np.concatenate([root_rows, np.repeat(np.arange(n_rows), fixed.size)])
    all_vals = np.concatenate([root_vals, np.tile(fixed, n_rows)])
    order = np.lexsort((all_vals, all_rows))
    rows_sorted = all_rows[order]
    vals_sorted = all_vals[order]
    same_row = rows_sorted[1:] == rows_sorted[:-1]
    a = vals_sorted[:-1][same_row]
    b = vals_sorted[1:][same_row]
    row = rows_sorted[:-1][same_row]

    total = np.zeros(n_rows, dtype=complex)
    magnitude = np.zeros(n_rows)
    errors = np.empty(a.size)
    for start in range(0, a.size, _INTERVAL_BLOCK):
        sl = slice(start, start + _INTERVAL_BLOCK)
        coarse, fine = _gauss_pair(a[sl], b[sl], u[row[sl]], s, p, variant, nodes, weights)
        total += np.bincount(row[sl], weights=fine.real, minlength=n_rows)
        total += 1j * np.bincount(row[sl], weights=fine.imag, minlength=n_rows)
        magnitude += np.bincount(row[sl], weights=np.abs(fine), minlength=n_rows)
        errors[sl] = np.abs(fine - coarse)

    allowed = settings.relative_tolerance * magnitude[row]
    bad = errors > allowed
    if np.any(bad):
        worst = int(np.argmax(np.where(bad, errors / np.maximum(allowed, np.finfo(float).tiny), 0.0)))
        raise IntegrationError(
            f"Quadrature did not converge at s={s:.6g}: interval estimate differs by {errors[worst]:.3e}",
            t=float(u[row[worst]]),
            interval=(float(a[worst]), float(b[worst])),
        )
    return total


def integrate_rows(u: np.ndarray, s: float, p: WaveletParams,
                   variant: PhaseVariant = PhaseVariant.KINK_FREE,
                   settings: Optional[QuadratureSettings] = None) -> np.ndarray:
    """Complex integral I(u) for every offset u = t - tau (seconds)."""
    settings = settings or QuadratureSettings()
    if s <= 0:
        raise ParameterDomainError(f"Scale must be positive (got {s})")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y_c = _cutoff_y(p, settings.cutoff_fraction)
    omega_c = y_c * p.omega0 / s
    rate = _phase_rate_bound(p, variant, y_c, settings.uniform_segments)
    fixed = _fixed_breakpoints(omega_c, settings.uniform_segments, phase_kink(s, p, variant, omega_c))
    nodes, weights = legendre.leggauss(settings.order)

    out = np.empty(u.size, dtype=complex)
    for start in range(0, u.size, _ROW_CHUNK):
        chunk = u[start:start + _ROW_CHUNK]
        out[start:start + chunk.size] = _integrate_chunk(
            chunk, s, p, variant, settings, omega_c, rate, fixed, nodes, weights)
    return out


def oscillation_roots(t_minus_tau: float, s: float, p: WaveletParams,
                      omega_c: Optional[float] = None,
                      variant: PhaseVariant = PhaseVariant.KINK_FREE,
                      settings: Optional[QuadratureSettings] = None) -> np.ndarray:
    """Zeros of cos(omega (t - tau) - phi(s omega / omega0)) on (0, omega_c], ascending."""
    settings = settings or QuadratureSettings()
    if omega_c is None:
        omega_c = cutoff_frequency(s, p, settings.cutoff_fraction)
    if omega_c <= 0:
        raise ParameterDomainError(f"omega_c must be positive (got {omega_c})")
    y_c = s * omega_c / p.omega0
    rate = _phase_rate_bound(p, variant, y_c, settings.uniform_segments)
    _, roots = _find_roots(np.array([t_minus_tau], dtype=float), s, p, variant, omega_c, rate,
                           settings.root_tolerance)
    return np.sort(roots)


def integration_plan(t_minus_tau: float, s: float, p: WaveletParams,
                     variant: PhaseVariant = PhaseVariant.KINK_FREE,
                     settings: Optional[QuadratureSettings] = None) -> IntegrationPlan:
    settings = settings or QuadratureSettings()
    omega_c = cutoff_frequency(s, p, settings.cutoff_fraction)
    roots = oscillation_roots(t_minus_tau, s, p, omega_c, variant, settings)
    return IntegrationPlan(omega_c=omega_c, roots=roots, order=settings.order,
                           uniform_segments=settings.uniform_segments,
                           kink=phase_kink(s, p, variant, omega_c))


def synthesize(s: float, tau: float, times: np.ndarray, p: WaveletParams,
               kind: WaveletKind = WaveletKind.HOLOMORPHIC,
               variant: PhaseVariant = PhaseVariant.KINK_FREE,
               norm_kind: Optional[WaveletKind] = None,
               settings: Optional[QuadratureSettings] = None) -> SampledWavelet:
    """
    Sample psi_{s tau}(t) = s^(-1/2) psi((t - tau) / s).

    norm_kind picks the normalization constant (defaults to kind). With a shared
    norm_kind the real wavelet equals 2 Re of the holomorphic one.
    """
    kind = WaveletKind(kind)
    times = np.asarray(times, dtype=float)
    integral = integrate_rows(times - tau, s, p, variant, settings)
    prefactor = p.k(norm_kind or kind) * math.sqrt(s / p.omega0)
    if kind == WaveletKind.REAL_WAVELET:
        values = prefactor / math.pi * integral.real
    else:
        values = prefactor / (2.0 * math.pi) * integral
    return SampledWavelet(times=times, values=values, scale=float(s), shift=float(tau),
                          kind=kind, variant=PhaseVariant(variant))


def mother_wavelet(p: WaveletParams, rate_hz: float = 28160.0, span_s: float = 0.02,
                   kind: WaveletKind = WaveletKind.REAL_WAVELET,
                   variant: PhaseVariant = PhaseVariant.KINK_FREE,
                   settings: Optional[QuadratureSettings] = None) -> SampledWavelet:
    """psi(t) at s = 1, tau = 0 on a symmetric grid of half-width span_s."""
    half = int(round(span_s * rate_hz))
    times = np.arange(-half, half + 1) / rate_hz
    return synthesize(1.0, 0.0, times, p, kind=kind, variant=variant, settings=settings)


def causality_score(w: SampledWavelet) -> float:
    """Fraction of wavelet energy at t > tau."""
    energy = np.abs(w.values) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        raise UndefinedScoreError("Causality score of an all-zero wavelet is undefined")
    return float(np.sum(energy[w.times - w.shift > 0.0])) / total
