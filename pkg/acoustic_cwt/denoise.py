"""Connectivity maps over importance masks, the neighbour-count cut, and the three-method denoising pipeline."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import ndimage

from .calibration import pearson
from .cwt_engine import MaskOptions, StreamMode, StreamResult, TransformGrid, WaveletTransformer
from .errors import ParameterDomainError, ShapeError, SignalInputError
from .reassignment import derivative_field, reassign
from .wavelet_model import WaveletParams

logger = logging.getLogger(__name__)

_NEIGHBOURS = np.array([[1, 1, 1],
                        [1, 0, 1],
                        [1, 1, 1]], dtype=np.int64)


class DenoiseMethod(str, Enum):
    PLAIN = "plain"
    REASSIGN = "reassign"
    CONNECTIVITY = "connectivity"


_METHOD_MODES = {
    DenoiseMethod.PLAIN: StreamMode.PLAIN,
    DenoiseMethod.REASSIGN: StreamMode.REASSIGN_MASK,
    DenoiseMethod.CONNECTIVITY: StreamMode.REASSIGN_CONNECTIVITY,
}


@dataclass
class ConnectivityMap:
    """Number of important 8-neighbours per pixel (0..8); out-of-grid neighbours count as unimportant."""

    counts: np.ndarray
    scales: Optional[np.ndarray] = None
    shifts: Optional[np.ndarray] = None

    @property
    def ln_scales(self) -> Optional[np.ndarray]:
        return None if self.scales is None else np.log(self.scales)


@dataclass
class DenoiseResult:
    output: np.ndarray
    method: DenoiseMethod
    stream: StreamResult
    rho_input: Optional[float]
    rho_clean: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out = {"method": self.method.value, "rho_input": self.rho_input, "rho_clean": self.rho_clean}
        out.update(self.stream.report.to_dict())
        out.update(self.extra)
        return out


def connectivity_map(mask: np.ndarray, scales: Optional[np.ndarray] = None,
                     shifts: Optional[np.ndarray] = None) -> ConnectivityMap:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.size == 0:
        raise ShapeError(f"Connectivity needs a non-empty 2-D mask (got shape {mask.shape})")
    counts = ndimage.convolve(mask.astype(np.int64), _NEIGHBOURS, mode="constant", cval=0)
    return ConnectivityMap(counts=counts, scales=scales, shifts=shifts)


def connectivity_cut(mask: np.ndarray, min_neighbours: int = 4) -> np.ndarray:
    """Keep true pixels with at least min_neighbours true neighbours (single pass)."""
    if not 0 <= min_neighbours <= 8:
        raise ParameterDomainError(f"min_neighbours must lie in [0, 8] (got {min_neighbours})")
    mask = np.asarray(mask, dtype=bool)
    return mask & (connectivity_map(mask).counts >= min_neighbours)


def window_mask(grid: TransformGrid, params: WaveletParams, mode: StreamMode,
                options: MaskOptions) -> Tuple[np.ndarray, Dict[str, float]]:
    """Source-pixel mask for one window, plus kept/discarded fractions."""
    field_ = derivative_field(grid, params, options.derivative_floor)
    rmap = reassign(grid, field_, params)
    bins = rmap.bin_importance(options.importance_threshold)
    if StreamMode(mode) == StreamMode.REASSIGN_CONNECTIVITY:
        bins = connectivity_cut(bins, options.min_neighbours)
    mask = rmap.pullback(bins, options.importance_threshold)
    return mask, {"kept_fraction": float(mask.mean()), "discarded_fraction": rmap.discarded_fraction}


def denoise_pipeline(signal: np.ndarray, transformer: WaveletTransformer,
                     method: DenoiseMethod = DenoiseMethod.CONNECTIVITY,
                     clean: Optional[np.ndarray] = None,
                     options: Optional[MaskOptions] = None,
                     threads: int = 1) -> DenoiseResult:
    """Reconstruct with the method's mask; rho against the clean reference when one is supplied."""
    method = DenoiseMethod(method)
    signal = np.asarray(signal, dtype=float)
    stream = transformer.process_stream(signal, _METHOD_MODES[method], options, threads)
    region = stream.region

    rho_clean = None
    if clean is not None:
        clean = np.asarray(clean, dtype=float)
        if clean.shape != signal.shape:
            raise SignalInputError(f"Clean reference has {clean.size} samples, signal has {signal.size}")
        rho_clean = pearson(clean[region], stream.output[region])
    else:
        logger.info("No clean reference supplied; reporting rho against the input only")

    logger.info(f"Denoise method {method.value}: rho_input={stream.report.rho}, rho_clean={rho_clean}")
    return DenoiseResult(output=stream.output, method=method, stream=stream,
                         rho_input=stream.report.rho, rho_clean=rho_clean)
