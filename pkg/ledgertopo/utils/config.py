"""Configuration management for ledger-topo.

Settings come from several sources and are merged in order of precedence:
built-in defaults, the project file ``./.ltopo.toml``, the user file
``~/.ltopo/config.toml``, ``LTOPO_*`` environment variables, an explicit
``--config`` file and finally command-line flags. All files are flat
key-value mappings in TOML, YAML or JSON.
"""

import difflib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import click
import tomlkit
import yaml

from ledgertopo.utils.exceptions import ConfigurationError, InvalidConfigError
from ledgertopo.utils.logging import get_logger

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

T = TypeVar("T", bound="BaseConfig")

APP_NAME = "ltopo"
ENV_PREFIX = "LTOPO_"
CONFIG_ENVVAR = "LTOPO_CONFIG"


class ConfigFormat(Enum):
    """Supported configuration file formats."""

    JSON = "json"
    YAML = "yaml"
    TOML = "toml"


class ConfigSource(Enum):
    """Configuration sources in order of precedence (lowest to highest)."""

    DEFAULT = 1
    PROJECT = 2
    USER = 3
    ENVIRONMENT = 4
    FILE = 5
    CLI = 6


@dataclass
class BaseConfig:
    """Base configuration class that all configs should inherit from."""

    def validate(self) -> None:
        """Validate configuration values.

        Raises:
            InvalidConfigError: If configuration is invalid
        """
        pass

    def to_dict(self) -> dict[str, Any]:
        """Convert configuration to dictionary."""
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls: type[T], data: dict[str, Any]) -> T:
        """Create configuration from dictionary.

        Args:
            data: Configuration data

        Returns:
            Configuration instance

        Raises:
            InvalidConfigError: If a key is not a known setting
        """
        known = cls.field_names()
        unknown = sorted(set(data) - set(known))
        if unknown:
            hints = []
            for key in unknown:
                close = difflib.get_close_matches(key, known, n=1)
                if close:
                    hints.append(f"Did you mean '{close[0]}' instead of '{key}'?")
            raise InvalidConfigError(
                f"Unknown configuration key(s): {', '.join(unknown)}",
                details={"unknown": unknown},
                suggestions=hints or [f"Known keys: {', '.join(known)}"],
            )
        return cls(**data)

    def merge(self, other: "BaseConfig") -> None:
        """Merge another configuration into this one.

        Args:
            other: Configuration to merge
        """
        for key, value in other.to_dict().items():
            if value is not None:
                setattr(self, key, value)


def _check(condition: bool, message: str, field_name: str, hint: str) -> None:
    if not condition:
        raise InvalidConfigError(
            message, details={"field": field_name}, suggestions=[hint]
        )


@dataclass
class PipelineConfig(BaseConfig):
    """Every tunable default of the pipeline, as one flat mapping."""

    # Ingest
    anchor: Optional[str] = None
    strict: bool = False

    # Graphs and topology
    threshold_mode: str = "aggregated"
    top_fraction: float = 0.01
    top_filter_mode: str = "aggregated"
    motif_mode: str = "induced"
    betti_k: int = 40
    betti_p: int = 0

    # Market features
    trader_fraction: float = 0.01
    trader_min_history: int = 8
    trader_min_active_weeks: int = 3
    sentiment_terms: list[str] = field(
        default_factory=lambda: ["democrats", "republicans"]
    )
    puell_window: int = 365

    # Forecaster
    hidden_size: int = 16
    layers: int = 2
    window: int = 8
    learning_rate: float = 0.01
    epochs: int = 200
    patience: int = 20
    grad_clip: float = 1.0
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    refit_stride: int = 1
    refit_epochs: int = 20
    seed: int = 0

    # Evaluation
    retrains: int = 20
    anomaly_quantile: float = 0.2
    alpha: float = 0.05
    rank_statistic: str = "magnitude"

    # Runtime
    max_workers: int = 1
    log_level: str = "WARNING"
    log_format: str = "colored"

    def validate(self) -> None:
        """Validate pipeline configuration."""
        _check(
            self.threshold_mode in ("aggregated", "raw"),
            f"Invalid threshold_mode: {self.threshold_mode}",
            "threshold_mode",
            "Use 'aggregated' or 'raw'",
        )
        _check(
            self.top_filter_mode in ("aggregated", "raw"),
            f"Invalid top_filter_mode: {self.top_filter_mode}",
            "top_filter_mode",
            "Use 'aggregated' or 'raw'",
        )
        _check(
            self.motif_mode in ("induced", "noninduced"),
            f"Invalid motif_mode: {self.motif_mode}",
            "motif_mode",
            "Use 'induced' or 'noninduced'",
        )
        _check(
            self.rank_statistic in ("magnitude", "signed"),
            f"Invalid rank_statistic: {self.rank_statistic}",
            "rank_statistic",
            "Use 'magnitude' or 'signed'",
        )
        for name in ("top_fraction", "trader_fraction"):
            value = getattr(self, name)
            _check(
                0 < value <= 1,
                f"{name} must be in (0, 1], got {value}",
                name,
                "Use a fraction such as 0.01",
            )
        _check(
            0 < self.anomaly_quantile <= 1,
            f"anomaly_quantile must be in (0, 1], got {self.anomaly_quantile}",
            "anomaly_quantile",
            "Use a quantile such as 0.2",
        )
        _check(
            0 < self.alpha < 1,
            f"alpha must be in (0, 1), got {self.alpha}",
            "alpha",
            "Use a level such as 0.05",
        )
        _check(
            self.betti_k in range(10, 101, 10),
            f"betti_k must be one of 10, 20, ..., 100, got {self.betti_k}",
            "betti_k",
            "Use a decile index such as 40",
        )
        _check(
            self.betti_p == 0,
            f"betti_p must be 0 for the delta_beta0 column, got {self.betti_p}",
            "betti_p",
            "beta_1 increments are listed in the report's Betti correlation table",
        )
        _check(
            len(self.sentiment_terms) == 2,
            "sentiment_terms must name exactly two search terms",
            "sentiment_terms",
            "Use e.g. ['democrats', 'republicans']",
        )
        for name in (
            "trader_min_history",
            "trader_min_active_weeks",
            "puell_window",
            "hidden_size",
            "layers",
            "window",
            "epochs",
            "patience",
            "retrains",
            "max_workers",
        ):
            value = getattr(self, name)
            _check(
                value >= 1,
                f"{name} must be at least 1, got {value}",
                name,
                "Use a positive integer",
            )
        for name in ("learning_rate", "grad_clip"):
            value = getattr(self, name)
            _check(
                value > 0,
                f"{name} must be positive, got {value}",
                name,
                "Use a positive number",
            )
        _check(
            self.refit_stride >= 0 and self.refit_epochs >= 0,
            "refit_stride and refit_epochs cannot be negative",
            "refit_stride",
            "Use 0 to disable walk-forward refits",
        )
        _check(
            self.train_fraction > 0
            and self.val_fraction >= 0
            and self.train_fraction + self.val_fraction < 1,
            "train_fraction + val_fraction must leave room for a test segment",
            "train_fraction",
            "Use e.g. train_fraction=0.6, val_fraction=0.2",
        )
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        _check(
            self.log_level.upper() in valid_levels,
            f"Invalid log level: {self.log_level}",
            "log_level",
            f"Use one of: {', '.join(valid_levels)}",
        )


def _coerce(raw: str, default: Any) -> Any:
    """Convert an environment string to the type of the field default."""
    if isinstance(default, bool):
        if raw.lower() not in ("true", "false", "1", "0"):
            raise InvalidConfigError(f"Expected a boolean, got {raw!r}")
        return raw.lower() in ("true", "1")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, list):
        return [part.strip() for part in raw.split(",") if part.strip()]
    if raw.isdigit():
        return int(raw)
    return raw


class ConfigManager:
    """Manages application configuration from multiple sources."""

    def __init__(
        self,
        config_class: type[BaseConfig] = PipelineConfig,
        app_name: str = APP_NAME,
        cwd: Optional[Path] = None,
        home: Optional[Path] = None,
    ):
        """Initialize configuration manager.

        Args:
            config_class: Configuration class to use
            app_name: Application name for config paths
            cwd: Directory searched for the project file (default: CWD)
            home: Home directory holding the user file (default: ``~``)
        """
        self.logger = get_logger(__name__)
        self.config_class = config_class
        self.app_name = app_name
        self.config: BaseConfig = config_class()
        self.config_sources: dict[ConfigSource, dict[str, Any]] = {}
        self.project_config_file = (cwd or Path.cwd()) / f".{app_name}.toml"
        self.user_config_file = (home or Path.home()) / f".{app_name}" / "config.toml"
        self.env_prefix = f"{app_name.upper()}_"

    def load(self, config_file: Optional[Path] = None) -> BaseConfig:
        """Load configuration from all sources.

        Args:
            config_file: Explicit configuration file (``--config``)

        Returns:
            Merged configuration object
        """
        self.config_sources[ConfigSource.DEFAULT] = self.config_class().to_dict()
        self._load_optional(ConfigSource.PROJECT, self.project_config_file)
        self._load_optional(ConfigSource.USER, self.user_config_file)
        self._load_env_vars()
        if config_file is not None:
            self.config_sources[ConfigSource.FILE] = self.read_config_file(
                Path(config_file)
            )
            self.logger.debug(f"Loaded config file {config_file}")

        self._merge_configs()
        self.config.validate()
        return self.config

    def _load_optional(self, source: ConfigSource, path: Path) -> None:
        if path.exists():
            self.config_sources[source] = self.read_config_file(path)
            self.logger.debug(f"Loaded {source.name.lower()} config from {path}")

    def _load_env_vars(self) -> None:
        """Load configuration from ``LTOPO_*`` environment variables."""
        defaults = self.config_class().to_dict()
        env_config = {}

        for key, value in os.environ.items():
            if not key.startswith(self.env_prefix) or key == CONFIG_ENVVAR:
                continue
            config_key = key[len(self.env_prefix) :].lower()
            if config_key not in defaults:
                self.logger.warning(f"Ignoring unknown environment setting {key}")
                continue
            env_config[config_key] = _coerce(value, defaults[config_key])

        if env_config:
            self.config_sources[ConfigSource.ENVIRONMENT] = env_config
            self.logger.debug(f"Loaded {len(env_config)} settings from environment")

    @staticmethod
    def read_config_file(path: Path) -> dict[str, Any]:
        """Read a flat configuration file based on its extension.

        Args:
            path: Path to configuration file

        Returns:
            Configuration dictionary

        Raises:
            ConfigurationError: If file cannot be read
        """
        suffix = path.suffix.lower()
        if suffix not in (".json", ".yaml", ".yml", ".toml"):
            raise InvalidConfigError(
                f"Unsupported config format: {suffix}",
                suggestions=["Use a .toml, .yaml or .json file"],
            )

        try:
            if suffix == ".json":
                with open(path) as f:
                    data = json.load(f)
            elif suffix in (".yaml", ".yml"):
                with open(path) as f:
                    data = yaml.safe_load(f) or {}
            else:
                with open(path, "rb") as f:
                    data = tomllib.load(f)
        except (OSError, ValueError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Failed to read config file {path}: {e}") from e

        if not isinstance(data, dict):
            raise InvalidConfigError(f"Config file {path} must hold a mapping")
        nested = [k for k, v in data.items() if isinstance(v, dict)]
        if nested:
            raise InvalidConfigError(
                f"Config file {path} must be flat; found tables: {', '.join(nested)}"
            )
        return dict(data)

    def _merge_configs(self) -> None:
        """Merge all configuration sources in order of precedence."""
        merged: dict[str, Any] = {}

        for source in ConfigSource:
            if source in self.config_sources:
                merged.update(self.config_sources[source])

        self.config = self.config_class.from_dict(merged)

    def update(self, **kwargs: Any) -> None:
        """Apply command-line overrides; ``None`` means "flag not given".

        Args:
            **kwargs: Configuration values to update
        """
        overrides = {k: v for k, v in kwargs.items() if v is not None}
        unknown = [k for k in overrides if not hasattr(self.config, k)]
        if unknown:
            raise InvalidConfigError(
                f"Unknown configuration key(s): {', '.join(sorted(unknown))}"
            )
        self.config_sources[ConfigSource.CLI] = overrides
        for key, value in overrides.items():
            setattr(self.config, key, value)

        self.config.validate()

    def save(self, path: Path, format: ConfigFormat = ConfigFormat.TOML) -> None:
        """Write the merged configuration as a snapshot.

        Args:
            path: Destination file
            format: File format
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {k: v for k, v in self.config.to_dict().items() if v is not None}

        if format == ConfigFormat.JSON:
            with open(path, "w") as f:
                json.dump(data, f, indent=2, sort_keys=True)
        elif format == ConfigFormat.YAML:
            with open(path, "w") as f:
                yaml.safe_dump(data, f, default_flow_style=False)
        else:
            with open(path, "w") as f:
                tomlkit.dump(data, f)

        self.logger.info(f"Configuration saved to {path}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value.

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            Configuration value
        """
        return getattr(self.config, key, default)


def load_config(
    config_file: Optional[Path] = None, **overrides: Any
) -> tuple[ConfigManager, PipelineConfig]:
    """Build a manager, load every source and apply flag overrides.

    Args:
        config_file: Explicit ``--config`` file
        **overrides: Flag values; ``None`` entries are ignored

    Returns:
        The manager and its merged :class:`PipelineConfig`
    """
    manager = ConfigManager()
    manager.load(config_file)
    manager.update(**overrides)
    config = manager.config
    assert isinstance(config, PipelineConfig)
    return manager, config


def config_option(f: Callable) -> Callable:
    """Decorator adding the ``--config/-c`` file option."""
    return click.option(
        "--config",
        "-c",
        "config_file",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Flat key-value configuration file (TOML, YAML or JSON)",
        envvar=CONFIG_ENVVAR,
    )(f)


def logging_options(f: Callable) -> Callable:
    """Decorator adding the verbosity options read by ``LoggingGroup``."""
    f = click.option("--debug", is_flag=True, help="Enable debug output")(f)
    f = click.option("--verbose", "-v", count=True, help="Increase verbosity")(f)
    f = click.option("--quiet", "-q", is_flag=True, help="Only report errors")(f)
    f = click.option(
        "--log-format",
        type=click.Choice(["colored", "plain", "json", "structured"]),
        default=None,
        help="Log output format",
    )(f)
    return f


def context_config(
    ctx: click.Context, **overrides: Any
) -> tuple[ConfigManager, PipelineConfig]:
    """Load the pipeline config for a command, honoring the root ``--config``.

    Values stored under ``OVERRIDES`` in the root context object (set by
    ``run``) apply below the command's own flags.
    """
    obj = ctx.find_root().obj or {}
    merged = dict(obj.get("OVERRIDES", {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return load_config(obj.get("CONFIG_FILE"), **merged)
