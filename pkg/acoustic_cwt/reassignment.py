"""
Reassignment of transform pixels through the structure equations (nu = c = 1).

Modulus log-derivatives are taken by finite differences; phase derivatives follow
from

    D_tau^phi   = omega0/s - (beta D_tau^r + omega0 D_s^r) / kappa
    s D_s^phi   = alpha - (s/omega0) (beta D_tau^phi - kappa D_tau^r)

and each pixel moves to s~ = omega0 / D_tau^phi, tau~ = tau + s^2 D_s^phi / omega0.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from .cwt_engine import TransformGrid
from .errors import ParameterDomainError, ShapeError, UnsupportedParametersError
from .wavelet_model import PhaseVariant, WaveletKind, WaveletParams, phase

logger = logging.getLogger(__name__)

DISCARDED = -1


@dataclass
class DerivativeField:
    d_tau_r: np.ndarray
    d_s_r: np.ndarray
    valid: np.ndarray
    d_tau_phi: Optional[np.ndarray] = None
    d_s_phi: Optional[np.ndarray] = None


@dataclass
class ReassignedMap:
    """Complex-weighted histogram over the source grid's (ln s, tau) nodes."""

    scales: np.ndarray
    shifts: np.ndarray
    weights: np.ndarray
    target: np.ndarray
    source_modulus: np.ndarray
    # Valid pixels whose tau~ left the shift axis; not histogrammed
    overflow: np.ndarray
    discards: Dict[str, int] = field(default_factory=dict)

    @property
    def ln_scales(self) -> np.ndarray:
        return np.log(self.scales)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.weights)

    @property
    def n_source(self) -> int:
        return self.target.size

    @property
    def discarded_fraction(self) -> float:
        return float(np.mean(self.target == DISCARDED)) if self.target.size else 0.0

    def bin_importance(self, threshold: float = 1e-12) -> np.ndarray:
        """Bins whose accumulated |weight| reaches the threshold."""
        if threshold < 0:
            raise ParameterDomainError(f"Importance threshold must be >= 0 (got {threshold})")
        return self.modulus >= threshold

    def pullback(self, bin_mask: np.ndarray, threshold: float = 1e-12) -> np.ndarray:
        """
        Source pixels whose target bin is set in bin_mask.

        Shift-overflow pixels keep their own importance (|WT| >= threshold); all other
        discarded pixels are unimportant.
        """
        if bin_mask.shape != self.target.shape:
            raise ShapeError(f"Bin mask shape {bin_mask.shape} differs from map shape {self.target.shape}")
        flat = np.zeros(self.target.size, dtype=bool)
        kept = (self.target >= 0).ravel()
        flat[kept] = bin_mask.ravel()[self.target.ravel()[kept]]
        mask = flat.reshape(self.target.shape)
        return mask | (self.overflow & (self.source_modulus >= threshold))


def log_derivatives(grid: TransformGrid, floor: float = 1e-3) -> DerivativeField:
    """
    Central differences of ln|WT| along tau (per second) and s (per unit scale).

    The scale derivative is taken in ln s and divided by s. Pixels below
    floor * max|WT| are flagged invalid.
    """
    if grid.coeffs.shape[0] < 2 or grid.coeffs.shape[1] < 2:
        raise ShapeError(f"Derivatives need at least 2 scales and 2 shifts (got {grid.coeffs.shape})")
    modulus = np.abs(grid.coeffs)
    peak = float(modulus.max())
    valid = (modulus > 0.0) & (modulus >= floor * peak)
    ln_r = np.log(np.maximum(modulus, np.finfo(float).tiny))
    d_tau_r = np.gradient(ln_r, grid.shifts, axis=1)
    d_s_r = np.gradient(ln_r, grid.ln_scales, axis=0) / grid.scales[:, None]
    return DerivativeField(d_tau_r=d_tau_r, d_s_r=d_s_r, valid=valid)


def _require_unit_exponents(p: WaveletParams) -> None:
    if p.nu != 1.0 or p.c_exp != 1.0:
        raise UnsupportedParametersError(
            f"Structure equations are only available for nu = c = 1 (got nu={p.nu}, c={p.c_exp})")


def phase_derivatives(d: DerivativeField, scales: np.ndarray, p: WaveletParams) -> DerivativeField:
    """Fill D_tau^phi and D_s^phi on valid pixels (NaN elsewhere)."""
    _require_unit_exponents(p)
    s = np.asarray(scales, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    d_tau_phi = p.omega0 / s - (p.beta * d.d_tau_r + p.omega0 * d.d_s_r) / p.kappa
    s_d_s_phi = p.alpha - (s / p.omega0) * (p.beta * d_tau_phi - p.kappa * d.d_tau_r)
    d_s_phi = s_d_s_phi / s
    d_tau_phi = np.where(d.valid, d_tau_phi, np.nan)
    d_s_phi = np.where(d.valid, d_s_phi, np.nan)
    return replace(d, d_tau_phi=d_tau_phi, d_s_phi=d_s_phi)


def derivative_field(grid: TransformGrid, p: WaveletParams, floor: float = 1e-3) -> DerivativeField:
    return phase_derivatives(log_derivatives(grid, floor), grid.scales, p)


def _nearest(position: np.ndarray) -> np.ndarray:
    """Nearest integer, ties toward the smaller index."""
    return np.ceil(position - 0.5).astype(np.int64)


def reassign(grid: TransformGrid, d: DerivativeField, p: WaveletParams) -> ReassignedMap:
    """Move every valid pixel to its instantaneous (s~, tau~) node and accumulate complex weights."""
    if d.d_tau_phi is None or d.d_s_phi is None:
        d = phase_derivatives(d, grid.scales, p)
    n_s, n_tau = grid.coeffs.shape
    s = grid.scales[:, None]
    tau = grid.shifts[None, :]
    target = np.full(grid.coeffs.shape, DISCARDED, dtype=np.int64)
    discards = {"invalid": 0, "nonpositive_frequency": 0, "scale_out_of_range": 0, "shift_out_of_range": 0}

    valid = d.valid.copy()
    discards["invalid"] = int(np.count_nonzero(~valid))

    positive = valid & (d.d_tau_phi > 0.0)
    discards["nonpositive_frequency"] = int(np.count_nonzero(valid & ~positive))

    with np.errstate(divide="ignore", invalid="ignore"):
        s_new = np.where(positive, p.omega0 / np.where(positive, d.d_tau_phi, 1.0), np.nan)
        tau_new = np.where(positive, tau + s ** 2 * np.where(positive, d.d_s_phi, 0.0) / p.omega0, np.nan)

    ln_s0 = math.log(grid.scales[0])
    ln_step = (math.log(grid.scales[-1]) - ln_s0) / (n_s - 1)
    tau_step = (grid.shifts[-1] - grid.shifts[0]) / (n_tau - 1)
    with np.errstate(invalid="ignore"):
        in_scale = positive & (s_new >= grid.scales[0]) & (s_new <= grid.scales[-1])
        discards["scale_out_of_range"] = int(np.count_nonzero(positive & ~in_scale))
        in_range = in_scale & (tau_new >= grid.shifts[0]) & (tau_new <= grid.shifts[-1])
        discards["shift_out_of_range"] = int(np.count_nonzero(in_scale & ~in_range))

    i_new = _nearest((np.log(s_new[in_range]) - ln_s0) / ln_step).clip(0, n_s - 1)
    j_new = _nearest((tau_new[in_range] - grid.shifts[0]) / tau_step).clip(0, n_tau - 1)
    target[in_range] = i_new * n_tau + j_new

    s_src = np.broadcast_to(s, grid.coeffs.shape)[in_range]
    tau_src = np.broadcast_to(tau, grid.coeffs.shape)[in_range]
    rotation = np.exp(0.5j * p.omega0 * (1.0 / s_new[in_range] + 1.0 / s_src) * (tau_new[in_range] - tau_src))
    contributions = grid.coeffs[in_range] * rotation

    weights = np.zeros(n_s * n_tau, dtype=complex)
    np.add.at(weights, target[in_range], contributions)
    logger.debug(f"Reassigned {int(in_range.sum())} of {target.size} pixels; discards {discards}")
    return ReassignedMap(scales=grid.scales, shifts=grid.shifts, weights=weights.reshape(n_s, n_tau),
                         target=target, source_modulus=np.abs(grid.coeffs),
                         overflow=in_scale & ~in_range, discards=discards)


def importance_mask(rmap: ReassignedMap, threshold: float = 1e-12) -> np.ndarray:
    """Source pixels whose target bin's |weight| reaches the threshold."""
    return rmap.pullback(rmap.bin_importance(threshold), threshold)


def analytic_harmonic_grid(scales: np.ndarray, shifts: np.ndarray, omega_s: float, p: WaveletParams,
                           variant: PhaseVariant = PhaseVariant.KINK_FREE,
                           kind: WaveletKind = WaveletKind.HOLOMORPHIC) -> TransformGrid:
    """
    Closed-form transform of exp(i omega_s t):

        WT(s, tau) = k s^(kappa nu) / omega0^(kappa nu) exp(i phi(s omega_s/omega0) + i omega_s tau)
                     exp(-(kappa/c) (s omega_s/omega0)^c) omega_s^(kappa nu - 1/2)
    """
    if omega_s <= 0:
        raise ParameterDomainError(f"Harmonic frequency must be positive (got {omega_s})")
    s = np.asarray(scales, dtype=float)[:, None]
    tau = np.asarray(shifts, dtype=float)[None, :]
    y = s * omega_s / p.omega0
    kn = p.kappa * p.nu
    log_mod = (math.log(p.k(kind)) + kn * np.log(s) - kn * math.log(p.omega0)
               - p.kappa * y ** p.c_exp / p.c_exp + (kn - 0.5) * math.log(omega_s))
    coeffs = np.exp(log_mod + 1j * (phase(y, p, variant) + omega_s * tau))
    return TransformGrid(scales=np.asarray(scales, dtype=float), shifts=np.asarray(shifts, dtype=float),
                         coeffs=coeffs)
