"""Slopes of arbitrary groupings: pooled, leave-one-out, per horizon and size, weighting gap."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import polars as pl

from das.logger import log_warn
from src.calib.fitter import CalibrationFit, fit_recalibration
from src.common.grid import CellData, CellKey, SlopeGrid, pool_cells
from src.config import FitConfig
from src.constants import WeightScheme
from src.errors import DataError, NumericalError

SLOPE_TABLE_SCHEMA = {
    "domain": pl.String,
    "bin": pl.Int64,
    "n": pl.Int64,
    "a": pl.Float64,
    "b": pl.Float64,
    "se_b": pl.Float64,
}


@dataclass
class GroupFits:
    """Fits per group label; labels whose pool could not be fitted land in `failures`."""

    fits: dict[str, CalibrationFit] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class WeightingGap:
    """b_contract(τ) − b_trade(τ) per horizon bin, pooled over sizes."""

    gaps: dict[int, float]
    skipped: list[int]

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.gaps.values()))) if self.gaps else float("nan")

    @property
    def peak_bin(self) -> int | None:
        if not self.gaps:
            return None
        return max(self.gaps, key=lambda t: self.gaps[t])


def pooled_slope(observations: CellData | Iterable[CellData], cfg: FitConfig) -> CalibrationFit:
    """Fit one slope on the union of the given observations."""
    if isinstance(observations, CellData):
        return fit_recalibration(observations, cfg)
    return fit_recalibration(pool_cells(observations), cfg)


def _fit_groups(pools: Mapping[str, list[CellData]], cfg: FitConfig) -> GroupFits:
    result = GroupFits()
    for label, parts in pools.items():
        if not parts or sum(p.n for p in parts) == 0:
            result.failures[label] = "empty pool"
            continue
        try:
            result.fits[label] = pooled_slope(parts, cfg)
        except NumericalError as exc:
            log_warn(f"group {label!r}: {exc}")
            result.failures[label] = str(exc)
    return result


def subgroup_slopes(groups: Mapping[str, CellData], cfg: FitConfig) -> GroupFits:
    """Pooled slope per subgroup label."""
    return _fit_groups({label: [data] for label, data in groups.items()}, cfg)


def leave_one_out(groups: Mapping[str, CellData], cfg: FitConfig) -> GroupFits:
    """For each label, the slope of every other group pooled together."""
    if len(groups) < 2:
        raise DataError(f"Leave-one-out needs at least 2 groups, got {len(groups)}")
    return _fit_groups(
        {
            label: [data for other, data in groups.items() if other != label]
            for label in groups
        },
        cfg,
    )


def _pooled_by(
    cells: Mapping[CellKey, CellData], domain: str, axis: Literal["horizon", "size"]
) -> dict[int, list[CellData]]:
    pools: dict[int, list[CellData]] = {}
    for key in sorted(cells):
        if key.domain != domain:
            continue
        index = key.horizon_bin if axis == "horizon" else key.size_bin
        pools.setdefault(index, []).append(cells[key])
    return pools


def horizon_fits(
    cells: Mapping[CellKey, CellData], domain: str, cfg: FitConfig
) -> dict[int, CalibrationFit]:
    """Slope per horizon bin for one domain, pooled over size bins."""
    fits = _fit_groups(
        {str(t): parts for t, parts in _pooled_by(cells, domain, "horizon").items()}, cfg
    )
    return {int(t): fit for t, fit in fits.fits.items()}


def size_fits(
    cells: Mapping[CellKey, CellData],
    domain: str,
    cfg: FitConfig,
    horizon_bins: Iterable[int] | None = None,
) -> dict[int, CalibrationFit]:
    """Slope per size bin for one domain, pooled over (selected) horizon bins."""
    selected = None if horizon_bins is None else set(horizon_bins)
    subset = {
        key: data
        for key, data in cells.items()
        if selected is None or key.horizon_bin in selected
    }
    fits = _fit_groups(
        {str(s): parts for s, parts in _pooled_by(subset, domain, "size").items()}, cfg
    )
    return {int(s): fit for s, fit in fits.fits.items()}


def weighting_gap(
    trade_fits: Mapping[int, CalibrationFit],
    contract_fits: Mapping[int, CalibrationFit],
    n_horizon: int = 9,
) -> WeightingGap:
    """Per-bin slope gap; bins missing from either side are skipped."""
    gaps: dict[int, float] = {}
    skipped: list[int] = []
    for t in range(n_horizon):
        if t in trade_fits and t in contract_fits:
            gaps[t] = contract_fits[t].b - trade_fits[t].b
        else:
            skipped.append(t)
    if skipped:
        log_warn(f"weighting gap skips horizon bins {skipped}")
    return WeightingGap(gaps, skipped)


def domain_weighting_gap(
    cells: Mapping[CellKey, CellData], domain: str, cfg: FitConfig, n_horizon: int = 9
) -> WeightingGap:
    """Fit one domain's horizon slopes under both schemes and compare."""
    trade_cfg = cfg.model_copy(update={"weight_scheme": WeightScheme.TRADE})
    contract_cfg = cfg.model_copy(update={"weight_scheme": WeightScheme.CONTRACT})
    return weighting_gap(
        horizon_fits(cells, domain, trade_cfg),
        horizon_fits(cells, domain, contract_cfg),
        n_horizon,
    )


def slope_table(
    cells: Mapping[CellKey, CellData],
    cfg: FitConfig,
    by: Literal["horizon", "size"] = "horizon",
    domains: Iterable[str] | None = None,
) -> pl.DataFrame:
    """Long table of pooled slopes: one row per (domain, bin) that could be fitted."""
    labels = sorted({k.domain for k in cells}) if domains is None else list(domains)
    rows = []
    for domain in labels:
        fits = (
            horizon_fits(cells, domain, cfg)
            if by == "horizon"
            else size_fits(cells, domain, cfg)
        )
        for index in sorted(fits):
            fit = fits[index]
            rows.append(
                {
                    "domain": domain,
                    "bin": index,
                    "n": fit.n,
                    "a": fit.a,
                    "b": fit.b,
                    "se_b": fit.se_b,
                }
            )
    return pl.DataFrame(rows, schema=SLOPE_TABLE_SCHEMA)


def size_table_with_delta(table: pl.DataFrame, n_size: int = 4) -> pl.DataFrame:
    """Wide domain × size slopes with Δ = b(largest bin) − b(smallest bin)."""
    wide = table.pivot(on="bin", index="domain", values="b", sort_columns=True)
    wide = wide.rename({c: f"size_{c}" for c in wide.columns if c != "domain"})
    lo, hi = "size_0", f"size_{n_size - 1}"
    if lo in wide.columns and hi in wide.columns:
        return wide.with_columns((pl.col(hi) - pl.col(lo)).alias("delta_large_single"))
    return wide.with_columns(pl.lit(None, dtype=pl.Float64).alias("delta_large_single"))


def horizon_grid(
    cells: Mapping[CellKey, CellData],
    cfg: FitConfig,
    domains: Iterable[str] | None = None,
    n_horizon: int = 9,
) -> SlopeGrid:
    """Per-(domain, horizon) slopes pooled over size, as a grid with one size bin."""
    labels = sorted({k.domain for k in cells}) if domains is None else list(domains)
    entries = {
        CellKey(domain, t, 0): (fit.b, fit.se_b, fit.n)
        for domain in labels
        for t, fit in horizon_fits(cells, domain, cfg).items()
    }
    return SlopeGrid.from_entries(entries, domains=labels, n_horizon=n_horizon, n_size=1)
