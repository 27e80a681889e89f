"""Precomputed daughter wavelets psi_{s,0} on an integer lag grid, with an on-disk cache."""

import asyncio
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .oscillatory_synthesis import QuadratureSettings, synthesize
from .wavelet_model import PhaseVariant, WaveletKind, WaveletParams

logger = logging.getLogger(__name__)


@dataclass
class WaveletBank:
    """
    Samples psi_{s,0}(L dt) for every grid scale s and contiguous integer lag L.

    Since psi_{s tau}(t) = psi_{s,0}(t - tau), any shift that is a whole number of
    samples is a plain index lookup.
    """

    scales: np.ndarray
    lags: np.ndarray
    dt: float
    values: np.ndarray
    kind: WaveletKind
    variant: PhaseVariant
    key: str = ""

    @property
    def lag_min(self) -> int:
        return int(self.lags[0])

    @property
    def lag_max(self) -> int:
        return int(self.lags[-1])

    def covers(self, lag_min: int, lag_max: int) -> bool:
        return self.lag_min <= lag_min and lag_max <= self.lag_max

    def lookup(self, lags: np.ndarray) -> np.ndarray:
        """Samples for every scale at the given integer lags; shape (scales,) + lags.shape."""
        lags = np.asarray(lags, dtype=np.int64)
        if lags.size and (lags.min() < self.lag_min or lags.max() > self.lag_max):
            raise ConfigurationError(
                f"Bank covers lags [{self.lag_min}, {self.lag_max}], "
                f"requested [{int(lags.min())}, {int(lags.max())}]"
            )
        return self.values[:, lags - self.lag_min]


def bank_key(p: WaveletParams, scales: np.ndarray, lag_min: int, lag_max: int, dt: float,
             kind: WaveletKind, variant: PhaseVariant, settings: QuadratureSettings) -> str:
    """Stable hash of everything that determines the bank's samples."""
    payload = {
        "params": p.model_dump(),
        "scales": [float(s).hex() for s in scales],
        "lags": [int(lag_min), int(lag_max)],
        "dt": float(dt).hex(),
        "kind": WaveletKind(kind).value,
        "variant": PhaseVariant(variant).value,
        "quadrature": settings.as_dict(),
    }
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()
    return digest[:20]


def _cache_path(cache_dir: str, key: str) -> Path:
    return Path(cache_dir) / f"bank-{key}.npz"


def load_cached_bank(cache_dir: str, key: str, kind: WaveletKind,
                     variant: PhaseVariant) -> Optional[WaveletBank]:
    path = _cache_path(cache_dir, key)
    if not path.exists():
        return None
    try:
        with np.load(path) as data:
            bank = WaveletBank(
                scales=data["scales"],
                lags=data["lags"],
                dt=float(data["dt"]),
                values=data["values"],
                kind=WaveletKind(kind),
                variant=PhaseVariant(variant),
                key=key,
            )
    except (OSError, KeyError, ValueError) as e:
        logger.warning(f"Ignoring unreadable bank cache {path}: {e}")
        return None
    if bank.values.shape != (bank.scales.size, bank.lags.size):
        logger.warning(f"Ignoring bank cache {path} with inconsistent shape {bank.values.shape}")
        return None
    logger.info(f"Reusing cached wavelet bank {path.name}")
    return bank


def save_bank(bank: WaveletBank, cache_dir: str) -> Path:
    path = _cache_path(cache_dir, bank.key)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, scales=bank.scales, lags=bank.lags, dt=np.float64(bank.dt), values=bank.values)
    logger.info(f"Saved wavelet bank to {path}")
    return path


async def synthesize_scales(p: WaveletParams, scales: Sequence[float], times: np.ndarray,
                            kind: WaveletKind, variant: PhaseVariant,
                            settings: QuadratureSettings, threads: int = 1) -> List[np.ndarray]:
    """
    Synthesize psi_{s,0} on `times` for every scale in parallel worker threads.

    Returns one sample row per scale, in scale order.
    """
    semaphore = asyncio.Semaphore(max(1, threads))

    async def one_scale(s: float) -> np.ndarray:
        async with semaphore:
            wavelet = await asyncio.to_thread(
                synthesize, float(s), 0.0, times, p, kind, variant, None, settings)
            logger.debug(f"Synthesized scale s={s:.5g}")
            return wavelet.values

    rows = await asyncio.gather(*[one_scale(s) for s in scales], return_exceptions=True)
    for s, row in zip(scales, rows):
        if isinstance(row, BaseException):
            logger.error(f"Synthesis failed for scale s={s:.5g}: {row}")
            raise row
    return list(rows)


async def build_bank_async(p: WaveletParams, scales: np.ndarray, lag_min: int, lag_max: int, dt: float,
                           kind: WaveletKind = WaveletKind.HOLOMORPHIC,
                           variant: PhaseVariant = PhaseVariant.KINK_FREE,
                           settings: Optional[QuadratureSettings] = None,
                           threads: int = 1,
                           cache_dir: Optional[str] = None,
                           use_cache: bool = True) -> WaveletBank:
    settings = settings or QuadratureSettings()
    if lag_max < lag_min:
        raise ConfigurationError(f"Empty lag range [{lag_min}, {lag_max}]")
    scales = np.asarray(scales, dtype=float)
    key = bank_key(p, scales, lag_min, lag_max, dt, kind, variant, settings)
    if use_cache and cache_dir:
        cached = load_cached_bank(cache_dir, key, kind, variant)
        if cached is not None:
            return cached

    lags = np.arange(lag_min, lag_max + 1, dtype=np.int64)
    logger.info(f"Synthesizing wavelet bank: {scales.size} scales x {lags.size} lags ({threads} threads)")
    rows = await synthesize_scales(p, scales, lags * dt, kind, variant, settings, threads)
    dtype = float if WaveletKind(kind) == WaveletKind.REAL_WAVELET else complex
    bank = WaveletBank(scales=scales, lags=lags, dt=float(dt), values=np.asarray(rows, dtype=dtype),
                       kind=WaveletKind(kind), variant=PhaseVariant(variant), key=key)
    if use_cache and cache_dir:
        try:
            save_bank(bank, cache_dir)
        except OSError as e:
            logger.warning(f"Could not cache wavelet bank: {e}")
    return bank


def build_bank(*args, **kwargs) -> WaveletBank:
    """Synchronous wrapper around build_bank_async."""
    return asyncio.run(build_bank_async(*args, **kwargs))
