"""Acoustic continuous wavelet transforms with the Reimann wavelet family."""

from .cwt_engine import StreamMode, TransformGrid, WaveletTransformer, WindowSettings
from .errors import AcousticCWTError
from .wavelet_model import PhaseVariant, TonotopicMap, WaveletKind, WaveletParams

__all__ = [
    "AcousticCWTError",
    "PhaseVariant",
    "StreamMode",
    "TonotopicMap",
    "TransformGrid",
    "WaveletKind",
    "WaveletParams",
    "WaveletTransformer",
    "WindowSettings",
]
