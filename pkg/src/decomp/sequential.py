"""Sequential projection: μ, then α, then β, then γ, each a mean of the running residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.common.grid import SlopeGrid
from src.decomp.components import ComponentSet
from src.errors import IncompleteGridError, StructuralError


@dataclass(frozen=True)
class ProjectionResult:
    components: ComponentSet
    ss_total: float
    # residual sum of squares after each stage: [total, after μ, after α, after β, after γ]
    rss_path: tuple[float, ...]


def complete_theta(grid: SlopeGrid) -> np.ndarray:
    try:
        grid.require_complete()
    except IncompleteGridError as exc:
        raise StructuralError(str(exc)) from exc
    return np.asarray(grid.theta, dtype=np.float64)


def project(grid: SlopeGrid) -> ProjectionResult:
    theta = complete_theta(grid)
    centred = theta - theta.mean()
    mu = theta.mean(axis=(0, 2))
    r1 = theta - mu[None, :, None]
    alpha = r1.mean(axis=(1, 2))
    r2 = r1 - alpha[:, None, None]
    beta = r2.mean(axis=2)
    r3 = r2 - beta[:, :, None]
    gamma = r3.mean(axis=1)
    residual = r3 - gamma[:, None, :]
    rss = tuple(
        float(np.sum(r * r)) for r in (centred, r1, r2, r3, residual)
    )
    return ProjectionResult(
        components=ComponentSet(grid.domains, mu, alpha, beta, gamma, residual),
        ss_total=rss[0],
        rss_path=rss,
    )


def fit_sequential(grid: SlopeGrid) -> ComponentSet:
    """Components of a complete grid; fitted plus residual reproduces θ exactly."""
    return project(grid).components


def horizon_curve(grid: SlopeGrid) -> dict[int, tuple[float, int]]:
    """
    μ(τ) as the mean slope over every present (domain, size) cell of each horizon
    bin, with the number of cells averaged. Works on incomplete grids.
    """
    theta = np.asarray(grid.theta, dtype=np.float64)
    curve: dict[int, tuple[float, int]] = {}
    for t in range(grid.n_horizon):
        values = theta[:, t, :]
        present = values[~np.isnan(values)]
        if present.size:
            curve[t] = (float(present.mean()), int(present.size))
    return curve
