#!/usr/bin/env python3
"""Configuration validation tool for the acoustic CWT toolkit."""

import json
import sys
from pathlib import Path

REQUIRED_WAVELET_KEYS = ("alpha_over_pi", "beta_over_pi", "phi_m_over_pi", "kappa")
WINDOW_KEYS = ("n_m", "overlap", "scale_segments", "tau_step_samples", "tau_span_windows", "rate_hz")


def main(argv=None):
    """Validate config.json and, optionally, a KEY=VALUE parameter file."""
    argv = sys.argv[1:] if argv is None else argv
    config_path = Path(argv[0]) if argv else Path("config.json")
    params_path = Path(argv[1]) if len(argv) > 1 else None

    print("Acoustic CWT - Configuration Validator")
    print("=" * 50)

    if not config_path.exists():
        print(f"❌ Configuration file not found: {config_path}")
        print("💡 Create config.json with wavelet, window and runtime sections")
        return 1

    print(f"📁 Found: {config_path}")

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            config = json.load(f)
        print(f"✅ JSON syntax valid in {config_path}")
    except json.JSONDecodeError as e:
        print(f"❌ Invalid JSON syntax: {e}")
        return 1
    except OSError as e:
        print(f"❌ Error reading file: {e}")
        return 1

    if not isinstance(config, dict):
        print("❌ Configuration must be a JSON object")
        return 1

    if not validate_wavelet_section(config.get("wavelet")):
        return 1
    print("✅ Wavelet parameters valid")

    if "window" in config:
        if not validate_window_section(config["window"]):
            return 1
        print("✅ Window settings valid")
    else:
        print("ℹ️  No window configuration (will use defaults)")

    if params_path is not None:
        if not validate_params_file(params_path):
            return 1
        print(f"✅ Parameter file {params_path} valid")

    return print_config_summary(config)


def validate_wavelet_section(wavelet) -> bool:
    """Check required keys and build the parameter vector (admissibility included)."""
    if not isinstance(wavelet, dict):
        print("❌ Missing 'wavelet' section")
        return False
    for key in REQUIRED_WAVELET_KEYS:
        if key not in wavelet:
            print(f"❌ Wavelet section missing '{key}'")
            return False
        if not isinstance(wavelet[key], (int, float)):
            print(f"❌ Wavelet '{key}' must be a number")
            return False
    if wavelet.get("phase_variant", "kink_free") not in ("raw", "kink_free"):
        print("❌ 'phase_variant' must be 'raw' or 'kink_free'")
        return False

    from acoustic_cwt.errors import AcousticCWTError
    from acoustic_cwt.wavelet_model import WaveletParams

    try:
        params = WaveletParams.from_config(wavelet)
    except AcousticCWTError as e:
        print(f"❌ {e}")
        return False
    print(f"   tangent slope: {params.tangent_slope:.4f}, c_psi^2: {params.c_psi2:.6g} s")
    return True


def validate_window_section(window) -> bool:
    """Build WindowSettings from the section (preset applied)."""
    if not isinstance(window, dict):
        print("❌ 'window' must be an object")
        return False

    from acoustic_cwt.config_loader import WINDOW_PRESETS, get_default_config
    from acoustic_cwt.cwt_engine import WindowSettings
    from acoustic_cwt.errors import AcousticCWTError

    preset = window.get("preset")
    if preset and preset not in WINDOW_PRESETS:
        print(f"❌ Unknown window preset '{preset}' (choose from {', '.join(WINDOW_PRESETS)})")
        return False
    merged = get_default_config()["window"]
    merged.update(window)
    if preset:
        for key, value in WINDOW_PRESETS[preset].items():
            if key not in window:
                merged[key] = value
    try:
        WindowSettings.from_config(merged)
    except AcousticCWTError as e:
        print(f"❌ {e}")
        return False
    return True


def validate_params_file(path: Path) -> bool:
    from acoustic_cwt.errors import AcousticCWTError
    from acoustic_cwt.wavelet_model import WaveletParams

    try:
        WaveletParams.from_config_file(path)
    except AcousticCWTError as e:
        print(f"❌ {e}")
        return False
    return True


def print_config_summary(config: dict) -> int:
    """Print configuration summary."""
    print("\n📋 Configuration Summary:")

    wavelet = config["wavelet"]
    print(f"   Wavelet: alpha={wavelet['alpha_over_pi']}pi, beta={wavelet['beta_over_pi']}pi, "
          f"phi_m={wavelet['phi_m_over_pi']}pi, kappa={wavelet['kappa']}")
    window = config.get("window", {})
    if window:
        shown = ", ".join(f"{key}={window[key]}" for key in WINDOW_KEYS if key in window)
        print(f"   Window: preset={window.get('preset')} {shown}")
    runtime = config.get("runtime", {})
    if runtime:
        print(f"   Runtime: threads={runtime.get('threads', 1)}, cache_dir={runtime.get('cache_dir')}")

    print("\n✅ Configuration is valid!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
