"""Configuration management system with YAML loading and environment variable overrides."""

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from src.utils.exceptions import ConfigurationError, ErrorCode

DEFAULT_CONFIG_PATH = Path("config/settings.yaml")


@dataclass
class EstimationConfig:
    """Settings for the GMI survival estimators."""

    bandwidth_exponent: float = 0.4
    thresholds: list[float] = field(default_factory=lambda: [1.3, 1.5, 1.7])
    followup_cap: float | None = None
    se_method: str = "bootstrap"
    confidence_level: float = 0.95


@dataclass
class BootstrapSettings:
    """Bootstrap resampling settings."""

    resamples: int = 5000
    seed: int = 20240101
    rebandwidth: bool = True
    workers: int = 1


@dataclass
class SimulationConfig:
    """Monte Carlo study settings (desk-scale defaults)."""

    mu: float = 3.0
    replicates: int = 500
    bootstrap_b: int = 300
    calibration_samples: int = 200_000
    truth_draws: int = 10_000_000
    truth: str = "monte_carlo"
    failure_threshold: float = 0.01
    workers: int = 0


@dataclass
class IOConfig:
    """CSV column mapping and output formatting."""

    t0_column: str = "t0"
    time1_column: str = "time1"
    status1_column: str = "status1"
    continuous_prefix: str = "z"
    categorical_prefix: str = "v"
    table_decimals: int = 3


@dataclass
class LoggingConfig:
    """Logging settings."""

    level: str = "WARNING"
    log_file: str | None = None
    json_file: str | None = None


@dataclass
class Config:
    """Main configuration container."""

    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    bootstrap: BootstrapSettings = field(default_factory=BootstrapSettings)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    io: IOConfig = field(default_factory=IOConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


_SECTIONS: dict[str, type] = {
    "estimation": EstimationConfig,
    "bootstrap": BootstrapSettings,
    "simulation": SimulationConfig,
    "io": IOConfig,
    "logging": LoggingConfig,
}


def _get_env_override(section: str, key: str) -> str | None:
    """Get environment variable override for a config key.

    Format: GMI_<SECTION>_<KEY> (e.g., GMI_BOOTSTRAP_RESAMPLES)
    """
    return os.environ.get(f"GMI_{section.upper()}_{key.upper()}")


def _coerce(raw: str, default: Any) -> Any:
    """Convert an environment string to the type of the default value."""
    if isinstance(default, bool):
        return raw.lower() in ("true", "1", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, list):
        return [float(part) for part in raw.split(",") if part.strip()]
    if raw.lower() in ("", "none", "null"):
        return None
    if default is None:
        try:
            return float(raw)
        except ValueError:
            return raw
    return raw


def _apply_env_overrides(config_dict: dict[str, dict[str, Any]]) -> dict[str, dict[str, Any]]:
    """Apply environment variable overrides to configuration dictionary."""
    for section, dc_class in _SECTIONS.items():
        values = config_dict.setdefault(section, {})
        defaults = dc_class()
        for f in fields(dc_class):
            env_value = _get_env_override(section, f.name)
            if env_value is None:
                continue
            current = values.get(f.name, getattr(defaults, f.name))
            try:
                values[f.name] = _coerce(env_value, current)
            except ValueError as e:
                raise ConfigurationError(
                    f"Invalid value for GMI_{section.upper()}_{f.name.upper()}: {env_value!r}",
                    cause=e,
                ) from e
    return config_dict


def _dict_to_dataclass(data: dict[str, Any], section: str) -> Any:
    """Convert dictionary to the section's dataclass, ignoring unknown keys."""
    dc_class = _SECTIONS[section]
    valid_keys = {f.name for f in fields(dc_class)}
    filtered_data = {k: v for k, v in data.items() if k in valid_keys}
    return dc_class(**filtered_data)


def load_config(path: Path | str | None = None) -> Config:
    """Load configuration from YAML file with environment variable overrides.

    Args:
        path: Path to configuration file. Defaults to config/settings.yaml

    Returns:
        Config object with all settings loaded

    Raises:
        ConfigurationError: If configuration file cannot be loaded or is invalid
    """
    path = DEFAULT_CONFIG_PATH if path is None else Path(path)

    config_dict: dict[str, dict[str, Any]] = {section: {} for section in _SECTIONS}

    if path.exists():
        try:
            with open(path, "r", encoding="utf-8") as f:
                file_config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in configuration file: {e}", cause=e) from e
        except OSError as e:
            raise ConfigurationError(
                f"Cannot read configuration file: {e}", code=ErrorCode.CONFIG_NOT_FOUND, cause=e
            ) from e
        if not isinstance(file_config, dict):
            raise ConfigurationError("Configuration file must contain a mapping of sections")
        for section in config_dict:
            if isinstance(file_config.get(section), dict):
                config_dict[section].update(file_config[section])

    config_dict = _apply_env_overrides(config_dict)

    try:
        config = Config(
            **{
                section: _dict_to_dataclass(values, section)
                for section, values in config_dict.items()
            }
        )
    except TypeError as e:
        raise ConfigurationError(f"Invalid configuration structure: {e}", cause=e) from e

    return config


def validate_config(config: Config) -> list[str]:
    """Validate configuration and return list of issues.

    Args:
        config: Configuration object to validate

    Returns:
        List of validation error messages (empty if valid)
    """
    issues: list[str] = []

    est = config.estimation
    if not 0 < est.bandwidth_exponent < 1:
        issues.append("estimation.bandwidth_exponent must be in (0, 1)")
    if not est.thresholds or any(r < 0 for r in est.thresholds):
        issues.append("estimation.thresholds must be a non-empty list of nonnegative values")
    if est.followup_cap is not None and est.followup_cap <= 0:
        issues.append("estimation.followup_cap must be positive")
    if est.se_method not in {"bootstrap", "plugin"}:
        issues.append("estimation.se_method must be 'bootstrap' or 'plugin'")
    if not 0 < est.confidence_level < 1:
        issues.append("estimation.confidence_level must be in (0, 1)")

    if config.bootstrap.resamples < 2:
        issues.append("bootstrap.resamples must be at least 2")
    if config.bootstrap.workers < 1:
        issues.append("bootstrap.workers must be positive")

    sim = config.simulation
    if sim.replicates < 1:
        issues.append("simulation.replicates must be positive")
    if sim.bootstrap_b < 2:
        issues.append("simulation.bootstrap_b must be at least 2")
    if sim.calibration_samples < 1000:
        issues.append("simulation.calibration_samples must be at least 1000")
    if sim.truth not in {"monte_carlo", "closed_form"}:
        issues.append("simulation.truth must be 'monte_carlo' or 'closed_form'")
    if not 0 <= sim.failure_threshold < 1:
        issues.append("simulation.failure_threshold must be in [0, 1)")
    if sim.workers < 0:
        issues.append("simulation.workers cannot be negative")

    if config.io.table_decimals < 0:
        issues.append("io.table_decimals cannot be negative")

    valid_log_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
    if config.logging.level.upper() not in valid_log_levels:
        issues.append(f"logging.level must be one of {sorted(valid_log_levels)}")

    return issues
