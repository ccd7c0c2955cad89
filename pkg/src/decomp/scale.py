"""Scale effect Δ_d: slope gap between the largest and smallest trade-size bins."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from src.calib.analyses import size_fits
from src.common.grid import CellData, CellKey, SlopeGrid
from src.config import FitConfig
from src.constants import ScaleVariant
from src.errors import DataError, MissingCellError


@dataclass(frozen=True)
class ScaleEffect:
    domain: str
    delta: float
    per_horizon_diffs: np.ndarray  # (T,), NaN where a bin is missing (aggregate only)
    size_lo: int
    size_hi: int
    variant: ScaleVariant


def within_horizon_delta(
    theta_d: np.ndarray, size_lo: int, size_hi: int
) -> tuple[float, np.ndarray]:
    """Mean over horizon bins of θ(τ, hi) − θ(τ, lo) for one domain's (T, S) slopes."""
    diffs = theta_d[:, size_hi] - theta_d[:, size_lo]
    return float(diffs.mean()), diffs


def scale_effect(
    grid: SlopeGrid,
    domain: str,
    variant: ScaleVariant = ScaleVariant.WITHIN_HORIZON,
    size_lo: int = 0,
    size_hi: int | None = None,
    cells: Mapping[CellKey, CellData] | None = None,
    fit_cfg: FitConfig | None = None,
) -> ScaleEffect:
    """
    within_horizon: mean of per-horizon slope differences from the grid.
    aggregate: difference of slopes refitted on the size bins pooled over all horizons.
    """
    size_hi = grid.n_size - 1 if size_hi is None else size_hi
    d = grid.domain_index(domain)
    theta_d = grid.theta[d]
    if variant == ScaleVariant.WITHIN_HORIZON:
        for t in range(grid.n_horizon):
            for s in (size_lo, size_hi):
                if np.isnan(theta_d[t, s]):
                    raise MissingCellError(f"Missing cell ({domain}, {t}, {s})")
        delta, diffs = within_horizon_delta(theta_d, size_lo, size_hi)
        return ScaleEffect(domain, delta, diffs, size_lo, size_hi, variant)

    if cells is None or fit_cfg is None:
        raise DataError("The aggregate scale effect needs cell observations and a fit config")
    fits = size_fits(cells, domain, fit_cfg)
    for s in (size_lo, size_hi):
        if s not in fits:
            raise MissingCellError(f"No fittable observations for ({domain}, *, {s})")
    diffs = theta_d[:, size_hi] - theta_d[:, size_lo]
    return ScaleEffect(
        domain, fits[size_hi].b - fits[size_lo].b, diffs, size_lo, size_hi, variant
    )
