"""Grid-search maximizer of the penalized recalibration objective.

An independent check of the Newton fitter: the objective is evaluated here from
scratch and maximized by repeatedly shrinking a rectangular grid around the best
point, so nothing is shared with the optimizer it verifies.
"""

from __future__ import annotations

import numpy as np

from src.common.grid import CellData
from src.config import FitConfig
from src.errors import GridBoundaryError, IdentificationError, SeparationError

A_RANGE = (-4.0, 4.0)
B_RANGE = (0.05, 5.0)
COARSE_POINTS = 81
FINE_POINTS = 21
FINAL_SPACING = 1e-7


def _objective_grid(
    a: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float
) -> np.ndarray:
    """Objective at every (a_i, b_j); shape (len(a), len(b))."""
    out = np.empty((a.size, b.size))
    for j, slope in enumerate(b):
        eta = a[:, None] + slope * x[None, :]
        # log σ(η) = −log(1 + e^−η), log(1 − σ(η)) = −log(1 + e^η)
        log_p = -np.logaddexp(0.0, -eta)
        log_q = -np.logaddexp(0.0, eta)
        out[:, j] = (w * (y * log_p + (1.0 - y) * log_q)).sum(axis=1) - 0.5 * lam * slope**2
    return out


def oracle_fit(cell: CellData, cfg: FitConfig) -> tuple[float, float]:
    """(a, b) maximizing the penalized weighted log-likelihood of one cell."""
    y = cell.outcome.astype(np.float64)
    if y.size < 2:
        raise IdentificationError(f"Need at least 2 observations, got {y.size}")
    if y.min() == y.max():
        raise SeparationError("All outcomes identical; no interior optimum")
    if np.unique(cell.price).size < 2:
        raise IdentificationError("Fewer than two distinct prices")
    p = cell.price / 100.0
    x = np.log(p) - np.log1p(-p)
    w = cell.weights(cfg.weight_scheme)
    lam = w.sum() / w.size / cfg.regularization_C

    a_grid = np.linspace(*A_RANGE, COARSE_POINTS)
    b_grid = np.linspace(*B_RANGE, COARSE_POINTS)
    while True:
        values = _objective_grid(a_grid, b_grid, x, y, w, lam)
        i, j = np.unravel_index(np.argmax(values), values.shape)
        a_best, b_best = a_grid[i], b_grid[j]
        if a_best in A_RANGE or b_best in B_RANGE:
            raise GridBoundaryError(
                f"Optimum ({a_best:.4f}, {b_best:.4f}) lies on the search boundary "
                f"a in {A_RANGE}, b in {B_RANGE}"
            )
        a_step = a_grid[1] - a_grid[0]
        b_step = b_grid[1] - b_grid[0]
        if max(a_step, b_step) < FINAL_SPACING:
            return float(a_best), float(b_best)
        a_grid = np.linspace(
            max(a_best - 2 * a_step, A_RANGE[0]), min(a_best + 2 * a_step, A_RANGE[1]), FINE_POINTS
        )
        b_grid = np.linspace(
            max(b_best - 2 * b_step, B_RANGE[0]), min(b_best + 2 * b_step, B_RANGE[1]), FINE_POINTS
        )
