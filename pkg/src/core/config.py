"""
Configuration settings for the magnetic tunneling toolkit
"""

import os
from typing import Any, Dict, Optional

from dotenv import dotenv_values

from src.core.errors import ConfigError


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes", "on")


def _env_optional_float(name: str) -> Optional[float]:
    raw = os.getenv(name, "").strip()
    return float(raw) if raw else None


class Settings:
    # de Gennes half-line grid
    GRID_T_MAX: float = float(os.getenv("TUNNEL_GRID_T_MAX", "20"))
    GRID_N: int = int(os.getenv("TUNNEL_GRID_N", "4000"))
    MU2_STEP: float = float(os.getenv("TUNNEL_MU2_STEP", "1e-3"))
    C1_OVERRIDE: Optional[float] = _env_optional_float("TUNNEL_C1_OVERRIDE")

    # Geometry
    GEOMETRY_SAMPLES: int = int(os.getenv("TUNNEL_GEOMETRY_SAMPLES", "4096"))
    WELL_SEPARATION_FRACTION: float = float(os.getenv("TUNNEL_WELL_SEPARATION_FRACTION", "1e-3"))
    WELL_KAPPA_TOL: float = float(os.getenv("TUNNEL_WELL_KAPPA_TOL", "1e-8"))

    # Effective operator
    NEAR_WELL_FRACTION: float = float(os.getenv("TUNNEL_NEAR_WELL_FRACTION", "0.02"))
    EFFECTIVE_POINTS_PER_WAVELENGTH: int = int(os.getenv("TUNNEL_EFFECTIVE_POINTS_PER_WAVELENGTH", "16"))
    EFFECTIVE_DRIFT_TOL: float = float(os.getenv("TUNNEL_EFFECTIVE_DRIFT_TOL", "1e-10"))
    EXTENDED_PRECISION: bool = _env_bool("TUNNEL_EXTENDED_PRECISION", "true")
    MP_DPS: int = int(os.getenv("TUNNEL_MP_DPS", "40"))

    # Boundary operator
    TAU_MAX: float = float(os.getenv("TUNNEL_TAU_MAX", "12"))
    N_TAU: int = int(os.getenv("TUNNEL_N_TAU", "200"))
    N_SIGMA: int = int(os.getenv("TUNNEL_N_SIGMA", "256"))
    CUTOFF_ETA: float = float(os.getenv("TUNNEL_CUTOFF_ETA", "0.1"))
    COLLAR_FRACTION: float = float(os.getenv("TUNNEL_COLLAR_FRACTION", "0.05"))
    ONE_WELL_PADDING: float = float(os.getenv("TUNNEL_ONE_WELL_PADDING", "10"))
    MIN_WEIGHT: float = float(os.getenv("TUNNEL_MIN_WEIGHT", "0.05"))

    # Application
    MAX_WORKERS: int = int(os.getenv("TUNNEL_MAX_WORKERS", "4"))
    OUTPUT_DIR: str = os.getenv("TUNNEL_OUTPUT_DIR", "output")
    CURVES_DIR: str = os.getenv("TUNNEL_CURVES_DIR", "data/curves")
    LOG_LEVEL: str = os.getenv("TUNNEL_LOG_LEVEL", "INFO")
    APP_HOST: str = os.getenv("APP_HOST", "0.0.0.0")
    APP_PORT: int = int(os.getenv("APP_PORT", "8000"))

    def __init__(self):
        # Load from .env file if it exists
        if os.path.exists('.env'):
            from dotenv import load_dotenv
            load_dotenv()
        self.reload()

    def reload(self):
        """Re-read every setting from the current environment."""
        self.GRID_T_MAX = float(os.getenv("TUNNEL_GRID_T_MAX", "20"))
        self.GRID_N = int(os.getenv("TUNNEL_GRID_N", "4000"))
        self.MU2_STEP = float(os.getenv("TUNNEL_MU2_STEP", "1e-3"))
        self.C1_OVERRIDE = _env_optional_float("TUNNEL_C1_OVERRIDE")
        self.GEOMETRY_SAMPLES = int(os.getenv("TUNNEL_GEOMETRY_SAMPLES", "4096"))
        self.WELL_SEPARATION_FRACTION = float(os.getenv("TUNNEL_WELL_SEPARATION_FRACTION", "1e-3"))
        self.WELL_KAPPA_TOL = float(os.getenv("TUNNEL_WELL_KAPPA_TOL", "1e-8"))
        self.NEAR_WELL_FRACTION = float(os.getenv("TUNNEL_NEAR_WELL_FRACTION", "0.02"))
        self.EFFECTIVE_POINTS_PER_WAVELENGTH = int(os.getenv("TUNNEL_EFFECTIVE_POINTS_PER_WAVELENGTH", "16"))
        self.EFFECTIVE_DRIFT_TOL = float(os.getenv("TUNNEL_EFFECTIVE_DRIFT_TOL", "1e-10"))
        self.EXTENDED_PRECISION = _env_bool("TUNNEL_EXTENDED_PRECISION", "true")
        self.MP_DPS = int(os.getenv("TUNNEL_MP_DPS", "40"))
        self.TAU_MAX = float(os.getenv("TUNNEL_TAU_MAX", "12"))
        self.N_TAU = int(os.getenv("TUNNEL_N_TAU", "200"))
        self.N_SIGMA = int(os.getenv("TUNNEL_N_SIGMA", "256"))
        self.CUTOFF_ETA = float(os.getenv("TUNNEL_CUTOFF_ETA", "0.1"))
        self.COLLAR_FRACTION = float(os.getenv("TUNNEL_COLLAR_FRACTION", "0.05"))
        self.ONE_WELL_PADDING = float(os.getenv("TUNNEL_ONE_WELL_PADDING", "10"))
        self.MIN_WEIGHT = float(os.getenv("TUNNEL_MIN_WEIGHT", "0.05"))
        self.MAX_WORKERS = int(os.getenv("TUNNEL_MAX_WORKERS", "4"))
        self.OUTPUT_DIR = os.getenv("TUNNEL_OUTPUT_DIR", "output")
        self.CURVES_DIR = os.getenv("TUNNEL_CURVES_DIR", "data/curves")
        self.LOG_LEVEL = os.getenv("TUNNEL_LOG_LEVEL", "INFO")
        self.APP_HOST = os.getenv("APP_HOST", "0.0.0.0")
        self.APP_PORT = int(os.getenv("APP_PORT", "8000"))


settings = Settings()


def parse_run_config_text(values: Dict[str, Optional[str]]) -> Dict[str, Any]:
    """
    Turn flat dotted keys (``domain.a=2``) into the nested mapping RunConfig expects

    Args:
        values: key/value pairs as returned by ``dotenv_values``

    Returns:
        Nested dictionary keyed by section
    """
    nested: Dict[str, Any] = {}
    for key, value in values.items():
        if value is None or value == "":
            continue
        if "." not in key:
            raise ConfigError(f"Config key '{key}' has no section (expected section.name=value)")
        section, name = key.split(".", 1)
        nested.setdefault(section, {})[name] = value
    return nested


def load_run_config(path: Optional[str] = None):
    """
    Load a RunConfig from a key=value file; defaults when no path is given

    Args:
        path: config file path or None

    Returns:
        Validated RunConfig
    """
    from src.models.schemas import RunConfig

    if path is None:
        return RunConfig()
    if not os.path.exists(path):
        raise ConfigError(f"Config file not found: {path}")

    try:
        return RunConfig.from_sections(parse_run_config_text(dotenv_values(path)))
    except ValueError as e:
        raise ConfigError(f"Invalid config {path}: {str(e)}") from e
