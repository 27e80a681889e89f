"""Shared fixtures: the calibrated parameter vector and a small, fast transform grid."""

import math

import numpy as np
import pytest

from acoustic_cwt.cwt_engine import WaveletTransformer, WindowSettings
from acoustic_cwt.wavelet_model import TonotopicMap, WaveletParams

RATE_HZ = 28160.0

# Five octaves (110 Hz .. 3520 Hz) in sixth-octave steps: s = 0.25 * 2**(j/6), s = 2 at j = 18
SMALL_MAP_HZ = (3520.0, 110.0)
SMALL_SEGMENTS = 30
RIDGE_INDEX_440 = 18
RIDGE_INDEX_1760 = 6


@pytest.fixture(scope="session")
def params() -> WaveletParams:
    return WaveletParams.from_pi_scaled(1.041, 8.851, -1.831, 6.209)


@pytest.fixture(scope="session")
def initial_params() -> WaveletParams:
    return WaveletParams.from_pi_scaled(1.0, 8.5, -2.0, 8.0)


@pytest.fixture(scope="session")
def small_map() -> TonotopicMap:
    return TonotopicMap.from_hz(*SMALL_MAP_HZ)


@pytest.fixture(scope="session")
def small_settings() -> WindowSettings:
    return WindowSettings(n_m=128, overlap=0.75, scale_segments=SMALL_SEGMENTS,
                          tau_step_samples=4, tau_span_windows=4, rate_hz=RATE_HZ)


@pytest.fixture(scope="session")
def bank_cache_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("banks"))


@pytest.fixture(scope="session")
def transformer(params, small_settings, small_map, bank_cache_dir) -> WaveletTransformer:
    return WaveletTransformer.create(params, small_settings, small_map, threads=4,
                                     cache_dir=bank_cache_dir, use_cache=True)


def harmonic(freq_hz: float, n_samples: int, rate_hz: float = RATE_HZ) -> np.ndarray:
    return np.sin(2.0 * math.pi * freq_hz * np.arange(n_samples) / rate_hz)
