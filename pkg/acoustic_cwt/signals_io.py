"""Test-signal generators, 16-bit mono WAV I/O and delimited-text export of grids and wavelets."""

import logging
import math
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Sequence, Union

import numpy as np

from .errors import AliasingError, ParameterDomainError, SignalInputError, WavFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SIX_A_FREQUENCIES = tuple(110.0 * 2 ** k for k in range(6))
PCM_SCALE = 32768.0


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise SignalInputError(f"Sampling rate must be positive (got {self.rate})")

    @property
    def channels(self) -> int:
        return 1

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.rate

    def __len__(self) -> int:
        return int(self.samples.size)


# -- generators --------------------------------------------------------------

def gen_harmonic(freq: float, duration: float, rate: float = 28160.0, amplitude: float = 1.0) -> Signal:
    """samples[n] = amplitude sin(2 pi freq n / rate)."""
    if freq >= rate / 2.0:
        raise AliasingError(f"{freq:g} Hz is at or above the Nyquist frequency {rate / 2.0:g} Hz")
    if freq <= 0 or duration <= 0:
        raise ParameterDomainError("Frequency and duration must be positive")
    n = np.arange(int(round(duration * rate)))
    return Signal(samples=amplitude * np.sin(2.0 * math.pi * freq * n / rate), rate=float(rate))


def local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices of samples strictly greater than both neighbours."""
    x = np.asarray(x)
    return np.nonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:]))[0] + 1


def patch_at_maxima(parts: Sequence[Signal]) -> Signal:
    """
    Join parts at sample-level local maxima.

    Every part is cut after its last local maximum; every part after the first
    starts at its first local maximum.
    """
    if not parts:
        raise SignalInputError("Nothing to patch")
    rate = parts[0].rate
    pieces = []
    for index, part in enumerate(parts):
        if part.rate != rate:
            raise SignalInputError(f"Part {index} has rate {part.rate}, expected {rate}")
        maxima = local_maxima(part.samples)
        if maxima.size == 0:
            raise SignalInputError(f"Part {index} has no interior local maximum")
        start = 0 if index == 0 else int(maxima[0])
        pieces.append(part.samples[start:int(maxima[-1]) + 1])
    return Signal(samples=np.concatenate(pieces), rate=rate)


def six_a_corpus(duration: float = 5.0, rate: float = 28160.0, amplitude: float = 1.0) -> Signal:
    """A2..A7 unit harmonics, patched at maxima."""
    return patch_at_maxima([gen_harmonic(f, duration, rate, amplitude) for f in SIX_A_FREQUENCIES])


def add_white_noise(sig: Signal, level: float, seed: int, reference: str = "peak") -> Signal:
    """
    Add i.i.d. normal noise with sigma = level * (peak |x| or RMS of x).

    Variates come from numpy's PCG64 generator (ziggurat normals), so output is
    bit-stable for a given seed.
    """
    if level < 0:
        raise ParameterDomainError(f"Noise level must be >= 0 (got {level})")
    if reference not in ("peak", "rms"):
        raise ParameterDomainError(f"Noise reference must be 'peak' or 'rms' (got {reference!r})")
    if level == 0:
        return Signal(samples=sig.samples.copy(), rate=sig.rate)
    if reference == "peak":
        scale = float(np.max(np.abs(sig.samples))) if sig.samples.size else 0.0
    else:
        scale = float(np.sqrt(np.mean(sig.samples ** 2))) if sig.samples.size else 0.0
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(sig.samples.size) * level * scale
    return Signal(samples=sig.samples + noise, rate=sig.rate)


# -- WAV ------------------------------------------------------------------------

def read_wav(path: PathLike) -> Signal:
    """Read 16-bit PCM mono; integers map to [-1, 1) by division by 32768."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            compression = wf.getcomptype()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except wave.Error as e:
        raise WavFormatError(str(e), field="header") from e
    except EOFError as e:
        raise WavFormatError("truncated file", field="header") from e
    if compression != "NONE":
        raise WavFormatError(f"compression {compression!r} is not PCM", field="compression")
    if channels != 1:
        raise WavFormatError(f"{channels} channels, expected mono", field="channels")
    if width != 2:
        raise WavFormatError(f"{8 * width}-bit samples, expected 16-bit", field="sample_width")
    audio = np.frombuffer(frames, dtype="<i2").astype(float) / PCM_SCALE
    logger.debug(f"Read {audio.size} samples at {rate} Hz from {path}")
    return Signal(samples=audio, rate=float(rate))


def write_wav(path: PathLike, sig: Signal) -> Path:
    """Clip to [-1, 1], round to the nearest 16-bit integer and write canonical PCM mono."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scaled = np.rint(np.clip(sig.samples, -1.0, 1.0) * PCM_SCALE)
    pcm = np.clip(scaled, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(round(sig.rate)))
        wf.writeframes(pcm.tobytes())
    return path


# -- delimited text ---------------------------------------------------------------

GRID_KINDS = ("complex", "modulus", "counts")


def export_grid(obj, path: PathLike, kind: str = "complex") -> Path:
    """
    Write one row per pixel, scale-major: ln_s, tau, then re/im, modulus or count.

    obj needs `scales` and `shifts` axes and one of `coeffs`, `weights` or `counts`.
    """
    if kind not in GRID_KINDS:
        raise ParameterDomainError(f"Unknown export kind {kind!r} (choose from {GRID_KINDS})")
    if getattr(obj, "scales", None) is None or getattr(obj, "shifts", None) is None:
        raise ParameterDomainError("Object has no (scale, shift) axes to export")
    payload = _payload(obj, kind)
    ln_s, tau = np.meshgrid(np.log(obj.scales), obj.shifts, indexing="ij")
    columns = [ln_s.ravel(), tau.ravel()]
    if kind == "complex":
        header = "ln_s,tau,re,im"
        columns += [payload.real.ravel(), payload.imag.ravel()]
        fmt = "%.17g"
    elif kind == "modulus":
        header = "ln_s,tau,modulus"
        columns.append(np.abs(payload).ravel())
        fmt = "%.17g"
    else:
        header = "ln_s,tau,count"
        columns.append(payload.ravel())
        fmt = ["%.17g", "%.17g", "%d"]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=header, comments="", fmt=fmt)
    return path


def _payload(obj, kind: str) -> np.ndarray:
    for name in ("coeffs", "weights", "counts"):
        value = getattr(obj, name, None)
        if value is not None:
            if kind == "counts" and name != "counts":
                raise ParameterDomainError("Only connectivity maps export integer counts")
            return np.asarray(value)
    raise ParameterDomainError("Object carries no coefficients, weights or counts")


def import_grid(path: PathLike) -> Dict[str, np.ndarray]:
    """Read an exported grid back into axes plus a 2-D payload (complex, modulus or count)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ln_s = np.unique(data[:, 0])
    tau = np.unique(data[:, 1])
    shape = (ln_s.size, tau.size)
    if data.shape[0] != shape[0] * shape[1]:
        raise SignalInputError(f"{path} is not a complete rectangular grid")
    out: Dict[str, np.ndarray] = {"scales": np.exp(data[::shape[1], 0]), "ln_scales": data[::shape[1], 0],
                                  "shifts": data[:shape[1], 1]}
    if header[2:] == ["re", "im"]:
        out["coeffs"] = (data[:, 2] + 1j * data[:, 3]).reshape(shape)
    elif header[2:] == ["modulus"]:
        out["modulus"] = data[:, 2].reshape(shape)
    elif header[2:] == ["count"]:
        out["counts"] = data[:, 2].astype(np.int64).reshape(shape)
    else:
        raise SignalInputError(f"Unrecognized grid header in {path}: {header}")
    return out


def export_columns(path: PathLike, header: Iterable[str], columns: Sequence[np.ndarray]) -> Path:
    """Generic delimited export used for wavelets and phase curves."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return path


def export_phase_curve(curve: Dict[str, np.ndarray], path: PathLike) -> Path:
    names = ("y", "raw", "kink_free", "tangent")
    return export_columns(path, names, [curve[name] for name in names])


def export_wavelet(wavelet, path: PathLike) -> Path:
    """(time, value) for real wavelets, (time, re, im) for holomorphic ones."""
    if np.iscomplexobj(wavelet.values):
        return export_columns(path, ("time", "re", "im"),
                              (wavelet.times, wavelet.values.real, wavelet.values.imag))
    return export_columns(path, ("time", "value"), (wavelet.times, wavelet.values))
