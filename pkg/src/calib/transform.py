"""Price recalibration: p* = p^θ / (p^θ + (1 − p)^θ) = σ(θ·logit p)."""

from __future__ import annotations

import numpy as np
import polars as pl
from scipy.special import expit, logit

from src.common.grid import SlopeGrid
from src.errors import DomainError


def recalibrate(p: float | np.ndarray, theta: float | np.ndarray) -> float | np.ndarray:
    """
    Map a raw price to a calibrated probability. θ > 1 pushes prices away from 0.5,
    θ < 1 pulls them toward it, 0.5 is fixed for every θ.
    """
    p_arr = np.asarray(p, dtype=np.float64)
    theta_arr = np.asarray(theta, dtype=np.float64)
    if np.any(~np.isfinite(p_arr)) or np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise DomainError(f"Price must lie strictly inside (0, 1), got {p}")
    if np.any(~np.isfinite(theta_arr)) or np.any(theta_arr <= 0.0):
        raise DomainError(f"Slope must be positive, got {theta}")
    result = expit(theta_arr * logit(p_arr))
    return float(result) if result.ndim == 0 else result


def recalibrate_cell(
    p: float, grid: SlopeGrid, domain: str, horizon_bin: int, size_bin: int
) -> float:
    """Recalibrate with the fitted slope of one cell."""
    return recalibrate(p, grid.value(domain, horizon_bin, size_bin))


def recalibrate_frame(requests: pl.DataFrame, grid: SlopeGrid) -> pl.DataFrame:
    """
    Batch form: rows of (price, domain, horizon_bin, size_bin) get `theta` and
    `recalibrated` columns. Missing cells raise MissingCellError.
    """
    thetas = [
        grid.value(row["domain"], int(row["horizon_bin"]), int(row["size_bin"]))
        for row in requests.iter_rows(named=True)
    ]
    prices = requests["price"].cast(pl.Float64).to_numpy()
    theta = np.asarray(thetas, dtype=np.float64)
    return requests.with_columns(
        pl.Series("theta", theta, dtype=pl.Float64),
        pl.Series(
            "recalibrated",
            np.atleast_1d(recalibrate(prices, theta)) if len(prices) else [],
            dtype=pl.Float64,
        ),
    )
