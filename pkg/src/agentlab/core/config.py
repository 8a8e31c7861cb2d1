"""Configuration module using Pydantic Settings for environment variables."""

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from agentlab.core.errors import ConfigurationError
from agentlab.schemas.features import MergeMode


class Settings(BaseSettings):
    """Experiment settings loaded from a config file, the environment and defaults."""

    model_config = SettingsConfigDict(
        env_prefix="AGENTLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Simulation Configuration
    master_seed: int = Field(default=20250501, ge=0, description="Master seed of the batch")
    n_runs: int = Field(default=40, ge=1, description="Number of independent runs")
    horizon: float | None = Field(
        default=None,
        gt=0,
        description="Run length in time units (0.1 s); None keeps the scenario value",
    )
    burn_in: float = Field(
        default=20000.0,
        ge=0,
        description="Warm-up period before t = 0 in which only makers and noise act",
    )
    tick_size: float = Field(default=0.01, gt=0, description="Price grid in currency units")
    scenario_file: Path | None = Field(
        default=None,
        description="Scenario definition file; None uses the packaged canonical scenario",
    )

    # Artifact Configuration
    out_dir: Path = Field(default=Path("artifacts"), description="Root of persisted artifacts")
    jobs: int | None = Field(
        default=None,
        ge=1,
        description="Parallel workers for runs and features; None uses all cores",
    )

    # Dataset Configuration
    merge_mode: MergeMode = Field(default=MergeMode.NONE, description="Noise-merge setting")
    feature_view: Literal[9, 18] = Field(default=18, description="Number of features used")
    merge_seed: int = Field(default=7, ge=0, description="Seed of the noise-merge matching")
    split_seed: int = Field(default=11, ge=0, description="Seed of the stratified split")
    split_fractions: tuple[float, float, float] = Field(
        default=(0.6, 0.1, 0.3),
        description="Train/validation/test fractions",
    )

    # Classification Configuration
    svm_grid: Literal["full", "linear"] = Field(
        default="full",
        description="Hyper-parameter grid: all kernels or linear only",
    )
    svm_tol: float = Field(default=1e-3, gt=0, description="KKT stopping tolerance")
    svm_max_iter: int = Field(default=100_000, ge=1, description="Solver iteration cap")

    # Clustering Configuration
    k_values: list[int] = Field(default=[7, 9, 15], description="Cluster counts to report")
    linkage: Literal["ward", "complete", "average", "centroid"] = Field(
        default="ward",
        description="Agglomeration linkage",
    )
    k_range: tuple[int, int] = Field(
        default=(2, 20),
        description="Inclusive k range scanned by silhouette and WCSS diagnostics",
    )

    # Diagnostics Configuration
    acf_max_lag: int = Field(default=300, ge=1, description="Largest ACF lag")
    histogram_bins: int = Field(default=100, ge=2, description="Return histogram bins")

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Root log level")
    log_format: Literal["plain", "keyvalue"] = Field(default="plain", description="Log format")

    @field_validator("split_fractions")
    @classmethod
    def _fractions_sum_to_one(cls, value: tuple[float, float, float]) -> tuple[float, ...]:
        if any(f < 0 for f in value) or abs(sum(value) - 1.0) > 1e-9:
            raise ValueError("split fractions must be non-negative and sum to 1")
        return value

    @field_validator("k_values")
    @classmethod
    def _positive_k(cls, value: list[int]) -> list[int]:
        if not value or any(k < 1 for k in value):
            raise ValueError("k values must be positive")
        return value

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return level

    @classmethod
    def from_sources(cls, config_path: Path | None = None, **overrides: Any) -> "Settings":
        """
        Build settings with precedence: overrides > config file > environment > defaults.

        Args:
            config_path: Optional YAML file with a flat mapping of setting names
            overrides: Command-line values; None entries are ignored

        Returns:
            Validated settings
        """
        values: dict[str, Any] = {}
        if config_path is not None:
            try:
                loaded = yaml.safe_load(Path(config_path).read_text(encoding="utf-8")) or {}
            except (OSError, yaml.YAMLError) as e:
                raise ConfigurationError(f"Cannot read config file {config_path}: {e}") from e
            if not isinstance(loaded, dict):
                raise ConfigurationError(f"Config file {config_path} must hold a mapping")
            values.update(loaded)
        values.update({k: v for k, v in overrides.items() if v is not None})

        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid settings: {e}") from e

