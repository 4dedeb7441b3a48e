# qwell/core/config.py
import copy
import logging
import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv
from pydantic import ConfigDict
from pydantic_settings import BaseSettings

from qwell.core.exceptions import ConfigError

logger = logging.getLogger("Qwell.Config")

# Project root (two levels up from qwell/core/config.py) for the .env file path
_BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
_ENV_FILE_PATH = os.path.join(_BASE_DIR, ".env")

# Load .env before Settings reads the environment (worker threads read settings too)
load_dotenv(dotenv_path=_ENV_FILE_PATH, override=False)


class Settings(BaseSettings):
    """
    Process-wide defaults loaded from environment variables / .env.
    Run configs override these per command.
    """
    QWELL_LOG_LEVEL: str = "INFO"
    QWELL_LOG_DIR: str = "logs"
    QWELL_OUTPUT_DIR: str = "out"

    # Galerkin truncation and control grid
    QWELL_K_MAX: int = 30
    QWELL_GRID_INTERVALS: int = 4096
    QWELL_QUADRATURE_ORDER: int = 64
    QWELL_TAIL_WARNING: float = 1e-9

    # Moment problems
    QWELL_GRAM_CONDITION_MAX: float = 1e10

    # Newton loops
    QWELL_NEWTON_MAX_ITER: int = 20
    QWELL_NEWTON_TOL: float = 1e-10

    # Obstruction machinery
    QWELL_KERNEL_TRUNCATION: int = 128
    QWELL_SCAN_RESOLUTION: int = 256

    QWELL_DEFAULT_SEED: int = 20240531
    QWELL_THREADS: int = 4

    model_config = ConfigDict(
        env_file=_ENV_FILE_PATH,
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    @property
    def NEWTON_BUDGET(self) -> Dict[str, float]:
        """Iteration cap and residual tolerance shared by every Newton loop."""
        return {
            "max_iter": self.QWELL_NEWTON_MAX_ITER,
            "tol": self.QWELL_NEWTON_TOL,
        }


# Singleton settings instance
settings = Settings()


class RunConfigLoader:
    """
    Loads one run config document (JSON, or YAML as a superset) and merges it
    over the command defaults, then over CLI overrides.
    Parsed files are cached per (path, mtime).
    """
    _cache: Dict[tuple, Dict[str, Any]] = {}

    def __init__(self):
        self.logger = logging.getLogger("Qwell.Config")

    def load_file(self, path: str) -> Dict[str, Any]:
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}")
        key = (os.path.abspath(path), os.path.getmtime(path))
        if key in self._cache:
            return copy.deepcopy(self._cache[key])
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {path} is not valid JSON/YAML: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a mapping at top level")
        self._cache[key] = data
        self.logger.debug(f"Loaded run config from {path}")
        return copy.deepcopy(data)

    def load(
        self,
        path: Optional[str] = None,
        defaults: Optional[Dict[str, Any]] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """defaults -> file -> overrides (None-valued overrides are ignored)."""
        merged: Dict[str, Any] = copy.deepcopy(defaults or {})
        if path:
            merged = self.merge_config(merged, self.load_file(path))
        if overrides:
            merged = self.merge_config(merged, {k: v for k, v in overrides.items() if v is not None})
        return merged

    def merge_config(self, base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        """Deep-merge override into base; nested dicts merge, everything else replaces."""
        result = copy.deepcopy(base)
        for key, value in override.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self.merge_config(result[key], value)
            else:
                result[key] = copy.deepcopy(value)
        return result
