"""Size × horizon confounding check."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import polars as pl

from src.common.grid import CellData, CellKey, SlopeGrid
from src.constants import CANONICAL_ORDER, Component, DecompositionType
from src.decomp.anova import variance_decomposition


@dataclass(frozen=True)
class SizeHorizonCheck:
    added_r2: float
    gamma_r2: float
    gamma_r2_with_interaction: float
    total_r2: float
    total_r2_with_interaction: float
    median_horizon_by_size: pl.DataFrame


def median_horizon_by_size(cells: Mapping[CellKey, CellData]) -> pl.DataFrame:
    """Median hours to close per (domain, size bin) over all observations."""
    pooled: dict[tuple[str, int], list[np.ndarray]] = {}
    for key in sorted(cells):
        pooled.setdefault((key.domain, key.size_bin), []).append(cells[key].horizon_hours)
    rows = [
        {
            "domain": domain,
            "size_bin": size_bin,
            "n": int(sum(a.size for a in arrays)),
            "median_hours": float(np.nanmedian(np.concatenate(arrays))),
        }
        for (domain, size_bin), arrays in pooled.items()
    ]
    return pl.DataFrame(
        rows,
        schema={
            "domain": pl.String,
            "size_bin": pl.Int64,
            "n": pl.Int64,
            "median_hours": pl.Float64,
        },
    )


def size_horizon_check(
    grid: SlopeGrid, cells: Mapping[CellKey, CellData]
) -> SizeHorizonCheck:
    """
    Refit with a shared size × horizon term (centred over both indices); report the
    R² it adds and γ's share with and without it (given all other terms).
    """
    base = variance_decomposition(grid, CANONICAL_ORDER, DecompositionType.III)
    extended = variance_decomposition(
        grid, (*CANONICAL_ORDER, Component.SIZE_HORIZON), DecompositionType.III
    )
    return SizeHorizonCheck(
        added_r2=extended.total_r2 - base.total_r2,
        gamma_r2=base.row(Component.GAMMA).marginal_r2,
        gamma_r2_with_interaction=extended.row(Component.GAMMA).marginal_r2,
        total_r2=base.total_r2,
        total_r2_with_interaction=extended.total_r2,
        median_horizon_by_size=median_horizon_by_size(cells),
    )
