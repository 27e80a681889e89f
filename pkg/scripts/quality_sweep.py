#!/usr/bin/env python3
"""
Reconstruction-quality sweep over unit harmonics, plus the denoising progression at 440 Hz.

Usage:
    python -m scripts.quality_sweep [--preset fast] [--duration 5] [--threads 4] [--out results.json]
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

SWEEP_FREQUENCIES = (80.0, 110.0, 220.0, 440.0, 880.0, 1760.0, 3520.0, 7040.0)


def run_sweep(transformer, duration: float, rate: float):
    from acoustic_cwt.cwt_engine import StreamMode
    from acoustic_cwt.signals_io import gen_harmonic

    rows = []
    for freq in SWEEP_FREQUENCIES:
        started = time.perf_counter()
        sig = gen_harmonic(freq, duration, rate)
        result = transformer.process_stream(sig.samples, StreamMode.PLAIN)
        rows.append({"freq_hz": freq, "rho": result.report.rho,
                     "elapsed_s": round(time.perf_counter() - started, 2)})
        print(f"  {freq:7.1f} Hz  rho={result.report.rho:.6f}")
    return rows


def run_denoise(transformer, duration: float, rate: float, level: float, seed: int):
    from acoustic_cwt.denoise import DenoiseMethod, denoise_pipeline
    from acoustic_cwt.signals_io import add_white_noise, gen_harmonic

    clean = gen_harmonic(440.0, duration, rate)
    noisy = add_white_noise(clean, level, seed)
    rows = []
    for method in DenoiseMethod:
        result = denoise_pipeline(noisy.samples, transformer, method, clean.samples)
        rows.append({"method": method.value, "rho_clean": result.rho_clean,
                     "kept_fraction": result.stream.report.kept_fraction})
        print(f"  {method.value:13s} rho(clean)={result.rho_clean:.6f}")
    return rows


def main():
    parser = argparse.ArgumentParser(description="Reconstruction and denoising quality sweep")
    parser.add_argument("--preset", default=None)
    parser.add_argument("--duration", type=float, default=5.0)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)

    from acoustic_cwt import config as runtime_config
    from acoustic_cwt.config_loader import (
        get_noise_config,
        get_synthesis_config,
        get_tonotopic_config,
        get_wavelet_config,
        get_window_config,
    )
    from acoustic_cwt.cwt_engine import WaveletTransformer, WindowSettings
    from acoustic_cwt.oscillatory_synthesis import QuadratureSettings
    from acoustic_cwt.wavelet_model import TonotopicMap, WaveletParams

    config = runtime_config.config
    settings = WindowSettings.from_config(get_window_config(config), args.preset)
    noise = get_noise_config(config)
    print(f"Building wavelet bank ({settings.scale_segments + 1} scales)...")
    transformer = WaveletTransformer.create(
        WaveletParams.from_config(get_wavelet_config(config)), settings,
        TonotopicMap.from_config(get_tonotopic_config(config)),
        quadrature=QuadratureSettings.from_config(get_synthesis_config(config)),
        threads=args.threads or runtime_config.THREADS, cache_dir=runtime_config.CACHE_DIR,
        use_cache=runtime_config.USE_CACHE)

    print("\n=== Unit harmonics ===")
    sweep = run_sweep(transformer, args.duration, settings.rate_hz)
    print("\n=== Denoising at 440 Hz ===")
    seed = args.seed if args.seed is not None else int(noise["seed"])
    denoise = run_denoise(transformer, args.duration, settings.rate_hz, float(noise["level"]), seed)

    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"settings": settings.to_dict(), "sweep": sweep, "denoise": denoise}, f, indent=2)
        print(f"\nResults saved to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
