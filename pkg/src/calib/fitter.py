"""Weighted, slope-penalized logistic recalibration fitted by Newton's method.

Model: P(y = 1 | p) = σ(a + b·logit(p)). The objective is

    ℓ(a, b) = Σ w_i [y_i log π_i + (1 − y_i) log(1 − π_i)] − (w̄ / 2C)·b²

with w̄ the mean weight, so under trade weighting (w = 1) the penalty is b²/(2C)
and rescaling every weight rescales ℓ without moving (a, b).
"""

from __future__ import annotations

from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from das.logger import log_debug, log_warn
from src.common.grid import CellData, CellKey, SlopeGrid
from src.config import FitConfig
from src.errors import IdentificationError, NumericalError, SeparationError

MAX_HALVINGS = 50


@dataclass(frozen=True, slots=True)
class CalibrationFit:
    a: float
    b: float
    se_a: float
    se_b: float
    n: int
    effective_weight: float
    loglik: float
    converged: bool
    iterations: int

    def predict(self, p: np.ndarray | float) -> np.ndarray:
        """Recalibrated probability σ(a + b·logit(p))."""
        return expit(self.a + self.b * logit(np.asarray(p, dtype=np.float64)))


@dataclass(frozen=True)
class NewtonPath:
    """Optimizer output including the objective after every accepted step."""

    params: np.ndarray
    information: np.ndarray
    objective_trace: list[float]
    converged: bool
    iterations: int


@dataclass
class CellFits:
    """Fits per cell plus the cells that could not be fitted and why."""

    fits: dict[CellKey, CalibrationFit] = field(default_factory=dict)
    failures: dict[CellKey, str] = field(default_factory=dict)


def penalty_strength(w: np.ndarray, regularization_C: float) -> float:
    return float(np.mean(w)) / regularization_C


def penalized_objective(
    a: float, b: float, x: np.ndarray, y: np.ndarray, w: np.ndarray, regularization_C: float
) -> float:
    eta = a + b * x
    loglik = np.sum(w * (y * eta - np.logaddexp(0.0, eta)))
    return float(loglik - 0.5 * penalty_strength(w, regularization_C) * b * b)


def penalized_gradient(
    a: float, b: float, x: np.ndarray, y: np.ndarray, w: np.ndarray, regularization_C: float
) -> np.ndarray:
    resid = w * (y - expit(a + b * x))
    return np.array(
        [resid.sum(), (resid * x).sum() - penalty_strength(w, regularization_C) * b]
    )


def _information(
    a: float, b: float, x: np.ndarray, w: np.ndarray, lam: float
) -> np.ndarray:
    pi = expit(a + b * x)
    v = w * pi * (1.0 - pi)
    return np.array(
        [[v.sum(), (v * x).sum()], [(v * x).sum(), (v * x * x).sum() + lam]]
    )


def check_design(price_fraction: np.ndarray, y: np.ndarray) -> None:
    """Raise when the recalibration slope is unbounded or not identified."""
    if y.size < 2:
        raise IdentificationError(f"Need at least 2 observations, got {y.size}")
    if np.all(y == y[0]):
        raise SeparationError(
            f"All {y.size} outcomes are {int(y[0])}; calibration slope is unbounded"
        )
    if np.unique(price_fraction).size < 2:
        raise IdentificationError("Fewer than two distinct prices; slope not identified")


def newton_path(
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    cfg: FitConfig,
    start: tuple[float, float] = (0.0, 1.0),
) -> NewtonPath:
    """Newton ascent with step halving; stops when the largest parameter step < tolerance."""
    lam = penalty_strength(w, cfg.regularization_C)
    params = np.array(start, dtype=np.float64)
    objective = penalized_objective(*params, x, y, w, cfg.regularization_C)
    trace = [objective]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        grad = penalized_gradient(*params, x, y, w, cfg.regularization_C)
        info = _information(*params, x, w, lam)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"Singular information matrix at {params}") from exc
        candidate = params + step
        new_objective = penalized_objective(*candidate, x, y, w, cfg.regularization_C)
        halvings = 0
        while new_objective < objective and halvings < MAX_HALVINGS:
            step /= 2.0
            candidate = params + step
            new_objective = penalized_objective(*candidate, x, y, w, cfg.regularization_C)
            halvings += 1
        if new_objective < objective:
            # no ascent direction left at machine precision
            converged = bool(np.max(np.abs(step)) < cfg.tolerance)
            break
        params, objective = candidate, new_objective
        trace.append(objective)
        if np.max(np.abs(step)) < cfg.tolerance:
            converged = True
            break
    return NewtonPath(
        params=params,
        information=_information(*params, x, w, lam),
        objective_trace=trace,
        converged=converged,
        iterations=iterations,
    )


def fit_arrays(
    price_fraction: np.ndarray,
    outcome: np.ndarray,
    weights: np.ndarray,
    cfg: FitConfig,
) -> CalibrationFit:
    y = np.asarray(outcome, dtype=np.float64)
    p = np.asarray(price_fraction, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    check_design(p, y)
    x = logit(p)
    path = newton_path(x, y, w, cfg)
    covariance = np.linalg.inv(path.information)
    se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    a, b = (float(v) for v in path.params)
    if not path.converged:
        log_warn(
            f"not converged after {path.iterations} iterations (n={y.size}, b={b:.4f})"
        )
    return CalibrationFit(
        a=a,
        b=b,
        se_a=float(se[0]),
        se_b=float(se[1]),
        n=int(y.size),
        effective_weight=float(w.sum()),
        loglik=path.objective_trace[-1],
        converged=path.converged,
        iterations=path.iterations,
    )


def fit_recalibration(cell: CellData, cfg: FitConfig) -> CalibrationFit:
    """Fit (a, b) for one cell under the configured weighting scheme."""
    return fit_arrays(
        cell.price_fraction, cell.outcome, cell.weights(cfg.weight_scheme), cfg
    )


def fit_cells(
    cells: Mapping[CellKey, CellData], cfg: FitConfig, threads: int = 1
) -> CellFits:
    """
    Fit every cell; degenerate cells are reported in `failures` instead of raising.
    Results do not depend on `threads`.
    """

    def _fit(key: CellKey) -> tuple[CellKey, CalibrationFit | NumericalError]:
        try:
            return key, fit_recalibration(cells[key], cfg)
        except NumericalError as exc:
            return key, exc

    keys = sorted(cells)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_fit, keys))
    else:
        outcomes = [_fit(key) for key in keys]

    result = CellFits()
    for key, outcome in outcomes:
        if isinstance(outcome, NumericalError):
            log_warn(f"cell ({key.domain}, {key.horizon_bin}, {key.size_bin}): {outcome}")
            result.failures[key] = str(outcome)
        else:
            result.fits[key] = outcome
    log_debug(f"{len(result.fits)} cells fitted, {len(result.failures)} failed")
    return result


def slope_grid(
    cell_fits: CellFits | Mapping[CellKey, CalibrationFit],
    domains: list[str] | tuple[str, ...] | None = None,
    n_horizon: int = 9,
    n_size: int = 4,
) -> SlopeGrid:
    """SlopeGrid of fitted slopes; unfitted cells stay NaN."""
    fits = cell_fits.fits if isinstance(cell_fits, CellFits) else cell_fits
    return SlopeGrid.from_entries(
        {key: (fit.b, fit.se_b, fit.n) for key, fit in fits.items()},
        domains=domains,
        n_horizon=n_horizon,
        n_size=n_size,
    )
