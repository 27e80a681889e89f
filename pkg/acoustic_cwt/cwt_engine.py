"""
Windowed forward and inverse wavelet transforms on the (s, tau) grid.

A signal is cut into windows of N_M samples advancing by (1 - d) N_M samples. Each
window is transformed on a log-uniform scale axis and a shift axis that starts at
the window start and spans tau_R; the inverse keeps only the central (1 - d) N_M
samples. Both transforms are left-endpoint Riemann sums over precomputed lookups
into the wavelet bank.
"""

import asyncio
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .bank import WaveletBank, build_bank_async
from .config_loader import WINDOW_PRESETS, resolve_scale_segments
from .errors import ConfigurationError, ParameterDomainError, ShapeError, SignalInputError
from .oscillatory_synthesis import QuadratureSettings
from .wavelet_model import PhaseVariant, TonotopicMap, WaveletKind, WaveletParams, scale_grid, scale_ratio

logger = logging.getLogger(__name__)

# Windows transformed per matrix product
_WINDOW_BATCH = 32
# Windows of the reference harmonic used for gain calibration
_GAIN_WINDOWS = 16


class WindowSettings(BaseModel):
    """Window length, overlap and grid resolution; shifts are whole multiples of the sample interval."""

    model_config = ConfigDict(frozen=True)

    n_m: int = Field(default=128, gt=1)
    overlap: float = Field(default=0.75, gt=0.0, lt=1.0)
    scale_segments: int = Field(default=200, ge=1)
    tau_step_samples: int = Field(default=4, ge=1)
    tau_span_windows: int = Field(default=8, ge=1)
    rate_hz: float = Field(default=28160.0, gt=0.0)

    @model_validator(mode="after")
    def _check_integral(self) -> "WindowSettings":
        stride = (1.0 - self.overlap) * self.n_m
        if abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
            raise ValueError(f"(1-d)*N_M must be a positive integer (got {stride:g})")
        if (self.n_m - round(stride)) % 2:
            raise ValueError("d*N_M must be even so the central segment is centred")
        if self.tau_span_samples % self.tau_step_samples:
            raise ValueError("tau_R must be a whole number of tau steps")
        return self

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def stride(self) -> int:
        return int(round((1.0 - self.overlap) * self.n_m))

    @property
    def edge(self) -> int:
        """Samples dropped at each side of a window, d N_M / 2."""
        return (self.n_m - self.stride) // 2

    @property
    def tau_span_samples(self) -> int:
        return self.tau_span_windows * self.n_m

    @property
    def n_shifts(self) -> int:
        return self.tau_span_samples // self.tau_step_samples

    @property
    def tau_step(self) -> float:
        return self.tau_step_samples * self.dt

    @property
    def tau_span(self) -> float:
        return self.tau_span_samples * self.dt

    @property
    def lag_range(self) -> Tuple[int, int]:
        """Smallest and largest t - tau, in samples, met by any (window sample, shift) pair."""
        return -(self.n_shifts - 1) * self.tau_step_samples, self.n_m - 1

    @property
    def latency_s(self) -> float:
        """Delay from a sample's arrival to the end of the window that reconstructs it."""
        return (1.0 - self.overlap / 2.0) * self.n_m * self.dt

    @property
    def cadence_hz(self) -> float:
        return 1.0 / (self.stride * self.dt)

    @classmethod
    def from_config(cls, section: Dict[str, Any], preset: Optional[str] = None) -> "WindowSettings":
        values = dict(section)
        if preset:
            if preset not in WINDOW_PRESETS:
                raise ConfigurationError(f"Unknown window preset: {preset}")
            values.update(WINDOW_PRESETS[preset])
        try:
            return cls(
                n_m=int(values["n_m"]),
                overlap=float(values["overlap"]),
                scale_segments=resolve_scale_segments(values["scale_segments"]),
                tau_step_samples=int(values["tau_step_samples"]),
                tau_span_windows=int(values["tau_span_windows"]),
                rate_hz=float(values["rate_hz"]),
            )
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise ParameterDomainError(f"Invalid window settings: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()


@dataclass
class TransformGrid:
    """Coefficients WT(s, tau) of one window, indexed (scale, shift)."""

    scales: np.ndarray
    shifts: np.ndarray
    coeffs: np.ndarray
    window_origin: int = 0

    def __post_init__(self):
        expected = (self.scales.size, self.shifts.size)
        if self.coeffs.shape != expected:
            raise ShapeError(f"Coefficient shape {self.coeffs.shape} does not match axes {expected}")

    @property
    def ln_scales(self) -> np.ndarray:
        return np.log(self.scales)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.coeffs)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coeffs.shape


class StreamMode(str, Enum):
    PLAIN = "plain"
    REASSIGN_MASK = "reassign_mask"
    REASSIGN_CONNECTIVITY = "reassign_connectivity"


@dataclass
class MaskOptions:
    importance_threshold: float = 1e-12
    min_neighbours: int = 4
    derivative_floor: float = 1e-3


@dataclass
class StreamReport:
    mode: str
    n_windows: int
    reconstructed: Tuple[int, int]
    rho: Optional[float]
    gain: float
    latency_s: float
    cadence_hz: float
    kept_fraction: float = 1.0
    discarded_fraction: float = 0.0
    elapsed_s: float = 0.0
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "mode": self.mode,
            "n_windows": self.n_windows,
            "reconstructed_start": self.reconstructed[0],
            "reconstructed_stop": self.reconstructed[1],
            "rho": self.rho,
            "gain": self.gain,
            "latency_s": self.latency_s,
            "cadence_hz": self.cadence_hz,
            "kept_fraction": self.kept_fraction,
            "discarded_fraction": self.discarded_fraction,
            "elapsed_s": self.elapsed_s,
        }
        out.update(self.extra)
        return out


@dataclass
class StreamResult:
    output: np.ndarray
    report: StreamReport

    @property
    def region(self) -> slice:
        return slice(*self.report.reconstructed)


class WaveletTransformer:
    """Forward/inverse transforms for one (parameters, settings, tonotopic map) triple."""

    def __init__(self, params: WaveletParams, settings: WindowSettings, bank: WaveletBank,
                 tonotopic_map: Optional[TonotopicMap] = None):
        self.params = params
        self.settings = settings
        self.tonotopic_map = tonotopic_map or TonotopicMap()
        self.bank = bank
        self.scales = scale_grid(self.tonotopic_map, params, settings.scale_segments)
        self._check_bank()

        ws = settings
        j = np.arange(ws.n_shifts)[:, None] * ws.tau_step_samples
        window_lags = np.arange(ws.n_m)[None, :] - j
        central_lags = np.arange(ws.edge, ws.edge + ws.stride)[None, :] - j
        n_scales = self.scales.size
        # (S*J, N) analysis rows and (S*J, C) synthesis rows
        self._analysis = (np.conj(bank.lookup(window_lags)) * ws.dt).reshape(n_scales * ws.n_shifts, ws.n_m)
        self._synthesis = bank.lookup(central_lags).reshape(n_scales * ws.n_shifts, ws.stride)

        ds_local = self.scales * (scale_ratio(self.tonotopic_map, ws.scale_segments) - 1.0)
        weights = 2.0 / params.c_psi2 * self.scales ** -2 * ds_local * ws.tau_step
        self._pixel_weights = np.repeat(weights, ws.n_shifts)
        self._gain: Optional[float] = None

    def _check_bank(self) -> None:
        lag_min, lag_max = self.settings.lag_range
        if self.bank.scales.shape != self.scales.shape or not np.allclose(self.bank.scales, self.scales, rtol=1e-12):
            raise ConfigurationError(
                f"Bank has {self.bank.scales.size} scales, grid needs {self.scales.size} "
                "(or their values differ)"
            )
        if not self.bank.covers(lag_min, lag_max):
            raise ConfigurationError(
                f"Bank lags [{self.bank.lag_min}, {self.bank.lag_max}] do not cover [{lag_min}, {lag_max}]"
            )
        if not math.isclose(self.bank.dt, self.settings.dt, rel_tol=1e-12):
            raise ConfigurationError(f"Bank sampling interval {self.bank.dt} differs from {self.settings.dt}")
        if WaveletKind(self.bank.kind) != WaveletKind.HOLOMORPHIC:
            raise ConfigurationError("Transforms need a holomorphic wavelet bank")

    @classmethod
    async def create_async(cls, params: WaveletParams, settings: WindowSettings,
                           tonotopic_map: Optional[TonotopicMap] = None,
                           variant: PhaseVariant = PhaseVariant.KINK_FREE,
                           quadrature: Optional[QuadratureSettings] = None,
                           threads: int = 1, cache_dir: Optional[str] = None,
                           use_cache: bool = True) -> "WaveletTransformer":
        tonotopic_map = tonotopic_map or TonotopicMap()
        scales = scale_grid(tonotopic_map, params, settings.scale_segments)
        lag_min, lag_max = settings.lag_range
        bank = await build_bank_async(params, scales, lag_min, lag_max, settings.dt,
                                      kind=WaveletKind.HOLOMORPHIC, variant=variant,
                                      settings=quadrature, threads=threads,
                                      cache_dir=cache_dir, use_cache=use_cache)
        return cls(params, settings, bank, tonotopic_map)

    @classmethod
    def create(cls, *args, **kwargs) -> "WaveletTransformer":
        return asyncio.run(cls.create_async(*args, **kwargs))

    # -- axes ------------------------------------------------------------------

    @property
    def n_scales(self) -> int:
        return self.scales.size

    def shifts(self, window_origin: int = 0) -> np.ndarray:
        ws = self.settings
        return (window_origin + np.arange(ws.n_shifts) * ws.tau_step_samples) * ws.dt

    def ridge_index(self, frequency_hz: float) -> int:
        """Grid index of the scale nearest omega0 / omega."""
        target = self.params.omega0 / (2.0 * math.pi * frequency_hz)
        return int(np.argmin(np.abs(np.log(self.scales / target))))

    # -- forward ------------------------------------------------------------------

    def forward_batch(self, windows: np.ndarray) -> np.ndarray:
        """Coefficients for a stack of windows, shape (B, S, J)."""
        windows = np.atleast_2d(windows)
        if windows.shape[1] != self.settings.n_m:
            raise ShapeError(f"Window length {windows.shape[1]} differs from N_M={self.settings.n_m}")
        coeffs = windows @ self._analysis.T
        return coeffs.reshape(windows.shape[0], self.n_scales, self.settings.n_shifts)

    def forward(self, window: np.ndarray, window_origin: int = 0) -> TransformGrid:
        coeffs = self.forward_batch(np.asarray(window)[None, :])[0]
        return TransformGrid(scales=self.scales, shifts=self.shifts(window_origin),
                             coeffs=coeffs, window_origin=window_origin)

    # -- inverse -----------------------------------------------------------------

    def inverse_batch(self, coeffs: np.ndarray, masks: Optional[np.ndarray] = None,
                      apply_gain: bool = True) -> np.ndarray:
        """Central samples for a stack of coefficient grids, shape (B, C)."""
        flat = coeffs.reshape(coeffs.shape[0], -1) * self._pixel_weights
        if masks is not None:
            flat = flat * masks.reshape(masks.shape[0], -1)
        out = (flat @ self._synthesis).real
        return out * self.gain if apply_gain else out

    def inverse(self, grid: TransformGrid, mask: Optional[np.ndarray] = None) -> np.ndarray:
        if grid.coeffs.shape != (self.n_scales, self.settings.n_shifts):
            raise ConfigurationError(f"Grid shape {grid.coeffs.shape} does not match this transformer")
        if mask is not None and np.shape(mask) != grid.coeffs.shape:
            raise ShapeError(f"Mask shape {np.shape(mask)} differs from grid shape {grid.coeffs.shape}")
        masks = None if mask is None else np.asarray(mask, dtype=bool)[None]
        return self.inverse_batch(grid.coeffs[None], masks)[0]

    # -- gain ------------------------------------------------------------------------

    @property
    def gain(self) -> float:
        if self._gain is None:
            self._gain = self.calibrate_gain()
        return self._gain

    def calibrate_gain(self) -> float:
        """Single output gain making the RMS of a reconstructed unit harmonic at omega0/2 match its input."""
        ws = self.settings
        frequency = self.params.f0_hz / 2.0
        if frequency >= ws.rate_hz / 2.0:
            frequency = ws.rate_hz / 8.0
        n = np.arange(ws.n_m + (_GAIN_WINDOWS - 1) * ws.stride)
        reference = np.sin(2.0 * math.pi * frequency * n / ws.rate_hz)
        starts = np.arange(_GAIN_WINDOWS) * ws.stride
        windows = np.stack([reference[k:k + ws.n_m] for k in starts])
        out = self.inverse_batch(self.forward_batch(windows), apply_gain=False).ravel()
        target = np.concatenate([reference[k + ws.edge:k + ws.edge + ws.stride] for k in starts])
        out_rms = float(np.sqrt(np.mean(out ** 2)))
        if out_rms == 0.0 or not math.isfinite(out_rms):
            raise ConfigurationError("Reference harmonic reconstructs to silence; cannot calibrate gain")
        gain = float(np.sqrt(np.mean(target ** 2))) / out_rms
        logger.debug(f"Calibrated output gain {gain:.6g} at {frequency:g} Hz")
        return gain

    # -- streams ----------------------------------------------------------------------

    def window_starts(self, length: int) -> np.ndarray:
        ws = self.settings
        if length < ws.n_m:
            raise SignalInputError(f"Signal of {length} samples is shorter than one window ({ws.n_m})")
        return np.arange((length - ws.n_m) // ws.stride + 1) * ws.stride

    def _process_batch(self, signal: np.ndarray, starts: np.ndarray, mode: StreamMode,
                       options: MaskOptions) -> Tuple[np.ndarray, List[Dict[str, float]]]:
        ws = self.settings
        windows = np.stack([signal[k:k + ws.n_m] for k in starts])
        coeffs = self.forward_batch(windows)
        if mode == StreamMode.PLAIN:
            return self.inverse_batch(coeffs), []

        from .denoise import window_mask

        masks = np.empty(coeffs.shape, dtype=bool)
        stats = []
        for b, origin in enumerate(starts):
            grid = TransformGrid(scales=self.scales, shifts=self.shifts(int(origin)),
                                 coeffs=coeffs[b], window_origin=int(origin))
            masks[b], window_stats = window_mask(grid, self.params, mode, options)
            stats.append(window_stats)
        return self.inverse_batch(coeffs, masks), stats

    async def process_stream_async(self, signal: np.ndarray, mode: StreamMode = StreamMode.PLAIN,
                                   options: Optional[MaskOptions] = None,
                                   threads: int = 1) -> StreamResult:
        mode = StreamMode(mode)
        options = options or MaskOptions()
        signal = np.asarray(signal, dtype=float)
        ws = self.settings
        started = time.perf_counter()
        starts = self.window_starts(signal.size)
        _ = self.gain

        semaphore = asyncio.Semaphore(max(1, threads))

        async def run_batch(batch: np.ndarray):
            async with semaphore:
                return await asyncio.to_thread(self._process_batch, signal, batch, mode, options)

        batches = [starts[i:i + _WINDOW_BATCH] for i in range(0, starts.size, _WINDOW_BATCH)]
        results = await asyncio.gather(*[run_batch(batch) for batch in batches])

        output = signal.copy()
        stats: List[Dict[str, float]] = []
        for batch, (segments, batch_stats) in zip(batches, results):
            for origin, segment in zip(batch, segments):
                output[origin + ws.edge:origin + ws.edge + ws.stride] = segment
            stats.extend(batch_stats)

        region = (ws.edge, ws.edge + starts.size * ws.stride)
        report = StreamReport(
            mode=mode.value,
            n_windows=int(starts.size),
            reconstructed=region,
            rho=_region_rho(signal, output, region),
            gain=self.gain,
            latency_s=ws.latency_s,
            cadence_hz=ws.cadence_hz,
            elapsed_s=time.perf_counter() - started,
        )
        if stats:
            report.kept_fraction = float(np.mean([s["kept_fraction"] for s in stats]))
            report.discarded_fraction = float(np.mean([s["discarded_fraction"] for s in stats]))
        logger.info(f"Processed {starts.size} windows in mode {mode.value} (rho={report.rho})")
        return StreamResult(output=output, report=report)

    def process_stream(self, signal: np.ndarray, mode: StreamMode = StreamMode.PLAIN,
                       options: Optional[MaskOptions] = None, threads: int = 1) -> StreamResult:
        return asyncio.run(self.process_stream_async(signal, mode, options, threads))

    def average_transform(self, signal: np.ndarray) -> TransformGrid:
        """Window-averaged modulus |WT| over the whole signal; shifts are relative to the window start."""
        signal = np.asarray(signal, dtype=float)
        starts = self.window_starts(signal.size)
        total = np.zeros((self.n_scales, self.settings.n_shifts))
        for i in range(0, starts.size, _WINDOW_BATCH):
            batch = starts[i:i + _WINDOW_BATCH]
            windows = np.stack([signal[k:k + self.settings.n_m] for k in batch])
            total += np.abs(self.forward_batch(windows)).sum(axis=0)
        return TransformGrid(scales=self.scales, shifts=self.shifts(0),
                             coeffs=(total / starts.size).astype(complex), window_origin=0)


def _region_rho(signal: np.ndarray, output: np.ndarray, region: Tuple[int, int]) -> Optional[float]:
    from .calibration import pearson
    from .errors import UndefinedCorrelationError

    try:
        return pearson(signal[region[0]:region[1]], output[region[0]:region[1]])
    except (UndefinedCorrelationError, SignalInputError) as e:
        logger.warning(f"Correlation undefined over the reconstructed region: {e}")
        return None
