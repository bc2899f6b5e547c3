"""
Configuration settings for the pipe inversion toolkit
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError
from app.models.signature import EiiaConfig

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    # Inversion (EIIA) configuration
    eiia_max_iterations: int = 10
    eiia_rms_threshold_m: float = 0.03
    eiia_stability_epsilon_m: float = 1e-4
    eiia_refine: bool = True

    # B-scan preprocessing and clustering
    preprocess_threshold_k: float = 2.0
    preprocess_min_component_area: int = 8
    cluster_min_width: int = 15
    cluster_tolerance_rows: int = 2

    # Point-set extraction
    extract_spacing_m: float = 0.02
    # None takes every column of the cluster at the spacing
    extract_count: Optional[int] = None

    # Benchmark sweeps
    bench_workers: int = 1

    # Logging
    log_level: str = "INFO"
    log_json: bool = True

    # Application Configuration
    app_name: str = "PipeScan"
    debug: bool = False

    model_config = SettingsConfigDict(
        env_prefix="PIPESCAN_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    def eiia_config(self) -> EiiaConfig:
        """Build the value object consumed by the inversion algorithm"""
        return EiiaConfig(
            max_iterations=self.eiia_max_iterations,
            rms_threshold_m=self.eiia_rms_threshold_m,
            stability_epsilon_m=self.eiia_stability_epsilon_m,
            refine=self.eiia_refine,
        )

    def echo(self) -> Dict[str, Any]:
        """Effective algorithm configuration, as echoed into reports"""
        return self.model_dump(exclude={"app_name", "debug", "log_level", "log_json"})


def load_settings(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> Settings:
    """
    Resolve settings with precedence CLI override > config file > environment > default

    Args:
        config_file: Optional JSON file holding a flat object of setting names
        overrides: Values given explicitly (None values are ignored)

    Returns:
        Settings: the resolved settings
    """
    values: Dict[str, Any] = {}

    if config_file is not None:
        path = Path(config_file)
        try:
            loaded = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(loaded) - set(Settings.model_fields))
        if unknown:
            raise ConfigError(f"unknown settings in {path}: {', '.join(unknown)}")
        values.update(loaded)
        logger.info(f"Loaded {len(loaded)} settings from {path}")

    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return Settings(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


# Global settings instance
settings = Settings()
