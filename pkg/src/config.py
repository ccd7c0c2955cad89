"""Declarative pipeline configuration.

One TOML file validated by pydantic models; unknown keys are rejected and
command-line flags override file values before validation.
"""

from __future__ import annotations

import hashlib
import json
import tomllib
from pathlib import Path
from typing import Any, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    FilePath,
    ValidationError,
    field_validator,
    model_validator,
)

from src.constants import (
    DEFAULT_HORIZON_EDGES_HOURS,
    DEFAULT_REPRESENTATIVE_LOG_SIZE,
    DEFAULT_RELIABLE_BINS,
    DEFAULT_SIZE_EDGES,
    BetaConstraint,
    BootstrapMethod,
    FileFormat,
    WeightScheme,
)
from src.errors import ConfigError

PENALTY_CONVENTION = (
    "Inverse penalty strength C: only the slope b is penalized, by (mean(w) / (2C))·b² "
    "with w the observation weights; with trade weights (w = 1) this is b²/(2C)"
)


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class InputPaths(StrictModel):
    """Input files; trades may be split over several shards."""

    trades: list[FilePath] = Field(default_factory=list)
    markets: FilePath | None = None
    rules: FilePath | None = None
    trades_format: FileFormat = FileFormat.CSV
    subgroup_rules: FilePath | None = None

    @field_validator("trades", mode="before")
    @classmethod
    def _single_path_is_one_shard(cls, value: Any) -> Any:
        if isinstance(value, (str, Path)):
            return [value]
        return value


class FilterConfig(StrictModel):
    price_min: int = Field(5, ge=1, le=99)
    price_max: int = Field(95, ge=1, le=99)
    min_trades_per_market: int = Field(10, ge=1)
    min_trades_per_cell: int = Field(200, ge=1)
    drop_negative_horizon: bool = True
    reliable_horizon_mask: list[int] | None = None

    @model_validator(mode="after")
    def _price_range(self) -> Self:
        if not self.price_min < self.price_max:
            raise ValueError(
                f"price_min ({self.price_min}) must be below price_max ({self.price_max})"
            )
        return self


class BinningConfig(StrictModel):
    """Interior bin edges: 8 horizon edges (hours) give 9 bins, 3 size edges give 4 bins."""

    horizon_edges_hours: list[float] = Field(
        default_factory=lambda: list(DEFAULT_HORIZON_EDGES_HOURS)
    )
    size_edges: list[int] = Field(default_factory=lambda: list(DEFAULT_SIZE_EDGES))
    representative_log_size: list[float] = Field(
        default_factory=lambda: list(DEFAULT_REPRESENTATIVE_LOG_SIZE)
    )

    @field_validator("horizon_edges_hours", "size_edges")
    @classmethod
    def _strictly_increasing(cls, edges: list) -> list:
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if edges and edges[0] <= 0:
            raise ValueError("bin edges must be positive")
        return edges

    @field_validator("size_edges")
    @classmethod
    def _sizes_above_one(cls, edges: list[int]) -> list[int]:
        if edges and edges[0] < 2:
            raise ValueError("first size edge must be at least 2 contracts")
        return edges

    @model_validator(mode="after")
    def _representative_sizes(self) -> Self:
        if len(self.representative_log_size) != self.n_size_bins:
            raise ValueError(
                f"representative_log_size needs {self.n_size_bins} values, "
                f"got {len(self.representative_log_size)}"
            )
        return self

    @property
    def n_horizon_bins(self) -> int:
        return len(self.horizon_edges_hours) + 1

    @property
    def n_size_bins(self) -> int:
        return len(self.size_edges) + 1


class FitConfig(StrictModel):
    """
    Per-cell logistic fit. `regularization_C` follows the inverse-strength convention:
    only the slope is penalized, by (mean(w) / (2C))·b² with w the observation weights,
    so under trade weighting the penalty is b²/(2C) and the intercept is free.
    """

    regularization_C: float = Field(10.0, gt=0, description=PENALTY_CONVENTION)
    weight_scheme: WeightScheme = WeightScheme.CONTRACT
    max_iterations: int = Field(100, ge=1)
    tolerance: float = Field(1e-8, gt=0)


class BootstrapConfig(StrictModel):
    replicates: int = Field(1000, ge=100)
    method: BootstrapMethod = BootstrapMethod.CELL_LEVEL
    confidence: float = Field(0.95, gt=0, lt=1)
    seed: int = Field(20240601, ge=0, lt=2**64)
    domains: list[str] = Field(default_factory=lambda: ["Politics"])


class SamplerConfig(StrictModel):
    chains: int = Field(4, ge=1)
    warmup: int = Field(2000, ge=0)
    keep: int = Field(2000, ge=1)
    target_accept: float = Field(0.8, gt=0, lt=1)
    max_depth: int = Field(10, ge=1, le=15)
    beta_constraint: BetaConstraint = BetaConstraint.DOUBLE


class RobustnessConfig(StrictModel):
    price_ranges: list[tuple[int, int]] = Field(
        default_factory=lambda: [(5, 95), (10, 90), (2, 98), (1, 99)]
    )
    regularization: list[float] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    volume_min_trades_per_market: int | None = 100


class PipelineConfig(StrictModel):
    inputs: InputPaths = Field(default_factory=InputPaths)
    filters: FilterConfig = Field(default_factory=FilterConfig)
    binning: BinningConfig = Field(default_factory=BinningConfig)
    fit: FitConfig = Field(default_factory=FitConfig)
    bootstrap: BootstrapConfig = Field(default_factory=BootstrapConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    robustness: RobustnessConfig = Field(default_factory=RobustnessConfig)
    reliable_bins: list[int] = Field(default_factory=lambda: list(DEFAULT_RELIABLE_BINS))
    output_dir: Path = Path("out")
    seed: int = Field(20240601, ge=0, lt=2**64)
    threads: int = Field(1, ge=1)

    def canonical_json(self) -> str:
        """Serialized config with sorted keys; input to the manifest hash."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _set_dotted(target: dict[str, Any], dotted_key: str, value: Any) -> None:
    *parents, leaf = dotted_key.split(".")
    node = target
    for key in parents:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"Cannot override {dotted_key}: {key} is not a table")
    node[leaf] = value


def format_validation_error(error: ValidationError) -> str:
    """Field-level messages, one per line."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {location}: {item['msg']}")
    return "Invalid configuration:\n" + "\n".join(lines)


def read_toml(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file does not exist: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid TOML: {exc}") from exc


def load_config[M: BaseModel](
    model: type[M],
    path: Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> M:
    """
    Build a validated config: TOML file values, then dotted-key overrides (flags win).
    Raises ConfigError with field-level messages on any validation failure.
    """
    raw: dict[str, Any] = read_toml(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(raw, key, value)
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from exc
