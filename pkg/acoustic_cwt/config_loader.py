"""Dynamic configuration loader for the acoustic CWT toolkit."""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "ACOUSTIC_CWT_CONFIG"

# Default fallback configuration (calibrated vector, half-semitone window settings)
DEFAULT_CONFIG: Dict[str, Any] = {
    "wavelet": {
        "alpha_over_pi": 1.041,
        "beta_over_pi": 8.851,
        "phi_m_over_pi": -1.831,
        "kappa": 6.209,
        "nu": 1.0,
        "c": 1.0,
        "f0_hz": 880.0,
        "phase_variant": "kink_free",
    },
    "tonotopic": {
        "f_max_hz": 20000.0,
        "f_min_hz": 60.0,
    },
    "window": {
        "preset": "standard",
        "n_m": 128,
        "overlap": 0.75,
        "scale_segments": 200,
        "tau_step_samples": 4,
        "tau_span_windows": 8,
        "rate_hz": 28160.0,
    },
    "synthesis": {
        "cutoff_fraction": 1e-6,
        "quadrature_order": 16,
        "relative_tolerance": 1e-8,
        "uniform_segments": 64,
        "root_tolerance": 1e-3,
    },
    "reassignment": {
        "derivative_floor": 1e-3,
        "importance_threshold": 1e-12,
    },
    "denoise": {
        "min_neighbours": 4,
    },
    "calibration": {
        "step_fractions": [0.10, 0.03, 0.01],
        "parameter_order": ["beta", "phi_m", "alpha", "kappa"],
        "causality_threshold": 1e-4,
        "seed": 12345,
        "max_walk_steps": 20,
        "causal_retries": 32,
    },
    "noise": {
        "level": 0.05,
        "reference": "peak",
        "seed": 20120415,
    },
    "runtime": {
        "threads": 1,
        "cache_dir": "data/banks",
        "use_cache": True,
    },
    "metadata": {
        "version": "fallback",
        "source": "hardcoded_defaults",
    },
}

# Named window presets; values override the "window" section
WINDOW_PRESETS: Dict[str, Dict[str, Any]] = {
    "standard": {"n_m": 128, "overlap": 0.75, "scale_segments": 200,
              "tau_step_samples": 4, "tau_span_windows": 8},
    "fast": {"n_m": 128, "overlap": 0.5, "scale_segments": 100,
             "tau_step_samples": 8, "tau_span_windows": 4},
    "wide": {"n_m": 256, "overlap": 0.75, "scale_segments": 200,
             "tau_step_samples": 4, "tau_span_windows": 8},
}

# Scale resolutions by name -> number of segments of the [0, 1] tonotopic interval
SCALE_RESOLUTIONS: Dict[str, int] = {
    "half-semitone": 200,
    "semitone": 100,
    "tone": 50,
}


def get_project_root() -> Path:
    """Get the project root directory."""
    # Go up from acoustic_cwt/config_loader.py to project root
    return Path(__file__).parent.parent


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from an explicit path, $ACOUSTIC_CWT_CONFIG or config.json.

    Args:
        path: Optional explicit path to a JSON config file

    Returns:
        Dict containing full configuration (missing sections filled from defaults)
    """
    candidates: List[Path] = []
    if path:
        candidates.append(Path(path))
    env_path = os.environ.get(CONFIG_ENV_VAR, "").strip()
    if env_path:
        candidates.append(Path(env_path))
    candidates.append(get_project_root() / "config.json")

    for config_path in candidates:
        if not config_path.exists():
            if path and config_path == Path(path):
                logger.warning(f"Config file {config_path} not found, trying fallbacks")
            continue
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            logger.warning(f"Invalid JSON in {config_path}: {e}")
            continue
        except OSError as e:
            logger.warning(f"Error loading {config_path}: {e}")
            continue

        normalized = normalize_config(raw)
        if normalized is None:
            logger.warning(f"Invalid configuration in {config_path}, using defaults")
            return get_default_config()
        logger.debug(f"Loaded configuration from {config_path}")
        return normalized

    logger.info("No configuration file found, using defaults")
    return get_default_config()


def normalize_config(config: Any) -> Optional[Dict[str, Any]]:
    """
    Merge a raw configuration over the defaults, section by section.

    Sections that are not JSON objects are replaced by their defaults.

    Returns:
        Normalized configuration or None if the top level is not an object
    """
    if not isinstance(config, dict):
        return None

    merged = get_default_config()
    for section, values in config.items():
        if section not in merged:
            merged[section] = values
            continue
        if not isinstance(values, dict):
            logger.warning(f"Section '{section}' must be an object, using defaults")
            continue
        merged[section].update(values)

    raw_window = config.get("window") if isinstance(config.get("window"), dict) else {}
    preset = raw_window.get("preset")
    if preset and preset not in WINDOW_PRESETS:
        logger.warning(f"Unknown window preset '{preset}', ignoring")
        merged["window"]["preset"] = None
    elif raw_window and not preset:
        merged["window"]["preset"] = None
    elif preset:
        # A preset named in the file fills only the keys the file leaves unset
        for key, value in WINDOW_PRESETS[preset].items():
            if key not in raw_window:
                merged["window"][key] = value
    return merged


def get_default_config() -> Dict[str, Any]:
    """Get default fallback configuration."""
    return copy.deepcopy(DEFAULT_CONFIG)


def _section(name: str, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    config = config if config is not None else load_config()
    section = dict(DEFAULT_CONFIG[name])
    section.update(config.get(name, {}))
    return section


def get_wavelet_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get the wavelet parameter section (pi-scaled keys)."""
    return _section("wavelet", config)


def get_tonotopic_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get tonotopic map limits in Hz."""
    return _section("tonotopic", config)


def get_window_config(config: Optional[Dict[str, Any]] = None,
                      preset: Optional[str] = None) -> Dict[str, Any]:
    """
    Get window settings, with an optional named preset applied on top.

    A preset named in the config file is already resolved by normalize_config;
    an explicit preset argument overrides every key it sets.
    """
    window = _section("window", config)
    if preset:
        if preset not in WINDOW_PRESETS:
            raise ConfigurationError(f"Unknown window preset: {preset}")
        window.update(WINDOW_PRESETS[preset])
        window["preset"] = preset
    return window


def get_synthesis_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get oscillatory quadrature settings."""
    return _section("synthesis", config)


def get_reassignment_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get reassignment thresholds."""
    return _section("reassignment", config)


def get_denoise_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get connectivity-cut settings."""
    return _section("denoise", config)


def get_calibration_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get coordinate-search settings."""
    return _section("calibration", config)


def get_noise_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get white-noise generator defaults."""
    return _section("noise", config)


def get_runtime_config(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Get thread count and bank cache location (cache_dir resolved against the project root)."""
    runtime = _section("runtime", config)
    cache_dir = Path(os.environ.get("ACOUSTIC_CWT_CACHE_DIR", runtime["cache_dir"]))
    if not cache_dir.is_absolute():
        cache_dir = get_project_root() / cache_dir
    runtime["cache_dir"] = str(cache_dir)
    return runtime


def resolve_scale_segments(value: Any) -> int:
    """Accept either an integer segment count or a named resolution."""
    if isinstance(value, str) and not value.isdigit():
        if value not in SCALE_RESOLUTIONS:
            raise KeyError(f"Unknown scale resolution: {value}")
        return SCALE_RESOLUTIONS[value]
    return int(value)
