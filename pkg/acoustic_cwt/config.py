"""Configuration for the acoustic CWT toolkit."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import dotenv_values, load_dotenv, set_key

from .config_loader import (
    get_runtime_config,
    get_window_config,
    load_config,
)
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

load_dotenv()

# Load configuration
config = load_config()

RUNTIME = get_runtime_config(config)

# Directory for cached wavelet banks
CACHE_DIR = RUNTIME["cache_dir"]
THREADS = max(1, int(RUNTIME["threads"]))
USE_CACHE = bool(RUNTIME["use_cache"])

# Keys of the flat window-settings file
WINDOW_FILE_KEYS = ("n_m", "overlap", "scale_segments", "tau_step_samples", "tau_span_windows", "rate_hz")


def read_window_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat KEY=VALUE window-settings file; missing keys come from the config section."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Settings file not found: {path}")
    values = {key: value for key, value in dotenv_values(path).items() if key in WINDOW_FILE_KEYS}
    unknown = set(dotenv_values(path)) - set(WINDOW_FILE_KEYS) - {"preset"}
    if unknown:
        logger.warning(f"Ignoring unknown keys in {path}: {', '.join(sorted(unknown))}")
    window = get_window_config(config)
    window.update(values)
    return window


def write_window_file(path: Union[str, Path], window: Dict[str, Any],
                      preset: Optional[str] = None) -> Path:
    """Write window settings as a flat KEY=VALUE file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.touch(exist_ok=True)
    for key in WINDOW_FILE_KEYS:
        if key in window:
            set_key(str(path), key, str(window[key]), quote_mode="never")
    if preset:
        set_key(str(path), "preset", preset, quote_mode="never")
    return path
