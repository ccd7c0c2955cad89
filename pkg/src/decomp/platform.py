"""Cross-platform comparison of slopes on shared domains."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import polars as pl

from src.common.grid import SlopeGrid
from src.constants import DEFAULT_RELIABLE_BINS
from src.errors import DataError, NoOverlapError

CELL_SCHEMA = {
    "domain": pl.String,
    "horizon_bin": pl.Int64,
    "size_bin": pl.Int64,
    "slope_a": pl.Float64,
    "slope_b": pl.Float64,
    "delta": pl.Float64,
    "n_b": pl.Int64,
    "reliable": pl.Boolean,
}


@dataclass(frozen=True)
class PlatformComparison:
    cells: pl.DataFrame
    domain_means: pl.DataFrame


def platform_delta(
    grid_a: SlopeGrid,
    grid_b: SlopeGrid,
    reliable_bins: Sequence[int] = DEFAULT_RELIABLE_BINS,
) -> PlatformComparison:
    """
    delta = slope_b − slope_a for every cell present on both platforms; per-domain
    means of slope_a, slope_b and delta over reliable horizon bins, weighted by the
    observation counts of grid_b.
    """
    if grid_a.n_horizon != grid_b.n_horizon or grid_a.n_size != grid_b.n_size:
        raise DataError(
            f"Grid shapes differ: {grid_a.shape[1:]} vs {grid_b.shape[1:]} (horizon, size)"
        )
    shared = [d for d in grid_a.domains if d in grid_b.domains]
    if not shared:
        raise NoOverlapError(
            f"No shared domains between {list(grid_a.domains)} and {list(grid_b.domains)}"
        )
    reliable = set(reliable_bins)
    rows = []
    for domain in shared:
        ia, ib = grid_a.domain_index(domain), grid_b.domain_index(domain)
        for t in range(grid_a.n_horizon):
            for s in range(grid_a.n_size):
                a = grid_a.theta[ia, t, s]
                b = grid_b.theta[ib, t, s]
                if np.isnan(a) or np.isnan(b):
                    continue
                rows.append(
                    {
                        "domain": domain,
                        "horizon_bin": t,
                        "size_bin": s,
                        "slope_a": float(a),
                        "slope_b": float(b),
                        "delta": float(b - a),
                        "n_b": int(grid_b.n[ib, t, s]),
                        "reliable": t in reliable,
                    }
                )
    cells = pl.DataFrame(rows, schema=CELL_SCHEMA)
    weight = pl.col("n_b").cast(pl.Float64)
    domain_means = (
        cells.filter(pl.col("reliable") & (pl.col("n_b") > 0))
        .group_by("domain", maintain_order=True)
        .agg(
            pl.len().alias("cells"),
            pl.col("n_b").sum().alias("n_b"),
            ((pl.col("slope_a") * weight).sum() / weight.sum()).alias("mean_slope_a"),
            ((pl.col("slope_b") * weight).sum() / weight.sum()).alias("mean_slope_b"),
            ((pl.col("delta") * weight).sum() / weight.sum()).alias("mean_delta"),
        )
    )
    return PlatformComparison(cells=cells, domain_means=domain_means)
