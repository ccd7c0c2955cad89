"""Variance attribution (Type I/II/III sums of squares) and the weighted refit."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import polars as pl

from das.logger import log_debug
from src.common.grid import SlopeGrid
from src.constants import CANONICAL_ORDER, Component, DecompositionType
from src.decomp.components import ComponentSet
from src.decomp.design import (
    CONTAINS,
    GridDesign,
    build_design,
    effect_coding,
    solve_least_squares,
)
from src.decomp.sequential import complete_theta, project
from src.errors import DegenerateWeightError, StructuralError


@dataclass(frozen=True, slots=True)
class ComponentVariance:
    component: Component
    ss: float
    df: int
    marginal_r2: float
    cumulative_r2: float


@dataclass(frozen=True)
class VarianceTable:
    decomposition_type: DecompositionType
    weighted: bool
    ss_total: float
    ss_residual: float
    df_residual: int
    rows: tuple[ComponentVariance, ...]

    @property
    def total_r2(self) -> float:
        return 1.0 - self.ss_residual / self.ss_total

    def row(self, component: Component) -> ComponentVariance:
        for row in self.rows:
            if row.component == component:
                return row
        raise KeyError(component)

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "component": [r.component.value for r in self.rows],
                "ss": [r.ss for r in self.rows],
                "df": [r.df for r in self.rows],
                "marginal_r2": [r.marginal_r2 for r in self.rows],
                "cumulative_r2": [r.cumulative_r2 for r in self.rows],
            },
            schema={
                "component": pl.String,
                "ss": pl.Float64,
                "df": pl.Int64,
                "marginal_r2": pl.Float64,
                "cumulative_r2": pl.Float64,
            },
        ).with_columns(
            pl.lit(self.decomposition_type.value).alias("type"),
            pl.lit(self.weighted).alias("weighted"),
        )


class _Model:
    """Residual sums of squares of nested submodels over one grid, memoized by term set."""

    def __init__(self, grid: SlopeGrid, weights: np.ndarray | None):
        theta = complete_theta(grid)
        self.design: GridDesign = build_design(*theta.shape)
        self.y = theta.ravel()
        self.w = np.ones_like(self.y) if weights is None else weights.ravel()
        mean = np.sum(self.w * self.y) / np.sum(self.w)
        self.ss_total = float(np.sum(self.w * (self.y - mean) ** 2))
        if self.ss_total <= 0.0:
            raise StructuralError("Grid has zero total variance; R² is undefined")
        self._cache: dict[frozenset[Component], float] = {frozenset(): self.ss_total}

    def rss(self, terms: Sequence[Component] | frozenset[Component]) -> float:
        key = frozenset(terms)
        if key not in self._cache:
            ordered = [c for c in Component if c in key]
            fit = solve_least_squares(self.design.matrix(ordered), self.y, self.w)
            self._cache[key] = fit.rss
        return self._cache[key]


def _weights(grid: SlopeGrid) -> np.ndarray:
    se = np.asarray(grid.se, dtype=np.float64)
    if np.any(~np.isfinite(se)) or np.any(se <= 0.0):
        bad = np.argwhere(~(np.isfinite(se) & (se > 0.0)))[0]
        raise DegenerateWeightError(
            f"Cell ({grid.domains[bad[0]]}, {bad[1]}, {bad[2]}) has standard error "
            f"{se[tuple(bad)]}; weight 1/se² is not finite"
        )
    return 1.0 / se**2


def _sequential_ss(model: _Model, order: Sequence[Component]) -> list[float]:
    out = []
    previous = model.ss_total
    for k in range(len(order)):
        current = model.rss(order[: k + 1])
        out.append(previous - current)
        previous = current
    return out


def variance_decomposition(
    grid: SlopeGrid,
    order: Sequence[Component] = CANONICAL_ORDER,
    decomposition_type: DecompositionType = DecompositionType.I,
    weighted: bool = False,
) -> VarianceTable:
    """
    Sums of squares per component of the model containing exactly `order`.

    Type I: sequential increments in the given order (the canonical unweighted
    order uses the projection path). Type II: each term against the model without
    it and without the terms containing it. Type III: each term given all others.
    """
    order = [Component(c) for c in order]
    if len(set(order)) != len(order):
        raise ValueError(f"Duplicate components in order {order}")
    weights = _weights(grid) if weighted else None

    if (
        decomposition_type == DecompositionType.I
        and not weighted
        and tuple(order) == CANONICAL_ORDER
    ):
        projection = project(grid)
        rss = projection.rss_path
        if rss[0] <= 0.0:
            raise StructuralError("Grid has zero total variance; R² is undefined")
        ss_total = projection.ss_total
        ss_values = [rss[k] - rss[k + 1] for k in range(len(order))]
        ss_residual = rss[-1]
        design = build_design(*grid.shape)
    else:
        model = _Model(grid, weights)
        design = model.design
        ss_total = model.ss_total
        full = frozenset(order)
        ss_residual = model.rss(full)
        if decomposition_type == DecompositionType.I:
            ss_values = _sequential_ss(model, order)
        elif decomposition_type == DecompositionType.II:
            ss_values = []
            for term in order:
                reduced = full - CONTAINS[term] - {term}
                ss_values.append(model.rss(reduced) - model.rss(reduced | {term}))
        else:
            ss_values = [model.rss(full - {term}) - ss_residual for term in order]

    df_model = 1 + sum(design.df(term) for term in order)
    df_residual = design.n_cells - df_model
    rows = []
    cumulative = 0.0
    for term, ss in zip(order, ss_values, strict=True):
        marginal = ss / ss_total
        cumulative += marginal
        rows.append(ComponentVariance(term, ss, design.df(term), marginal, cumulative))
    log_debug(
        f"type {decomposition_type.value}{' weighted' if weighted else ''}: "
        f"total R² {1.0 - ss_residual / ss_total:.4f}"
    )
    return VarianceTable(
        decomposition_type=decomposition_type,
        weighted=weighted,
        ss_total=ss_total,
        ss_residual=ss_residual,
        df_residual=df_residual,
        rows=tuple(rows),
    )


def components_from_coefficients(
    design: GridDesign, coefficients: np.ndarray, theta: np.ndarray, domains: Sequence[str]
) -> ComponentSet:
    """Map constrained-basis coefficients of the canonical model back to components."""
    slices = design.slices(CANONICAL_ORDER)
    cd = effect_coding(design.n_domains)
    ct = effect_coding(design.n_horizon)
    cs = effect_coding(design.n_size)
    mu = coefficients[0] + ct @ coefficients[slices[Component.MU]]
    alpha = cd @ coefficients[slices[Component.ALPHA]]
    beta_raw = coefficients[slices[Component.BETA]].reshape(
        design.n_domains - 1, design.n_horizon - 1
    )
    beta = cd @ beta_raw @ ct.T
    gamma_raw = coefficients[slices[Component.GAMMA]].reshape(
        design.n_domains, design.n_size - 1
    )
    gamma = gamma_raw @ cs.T
    fitted = (
        mu[None, :, None] + alpha[:, None, None] + beta[:, :, None] + gamma[:, None, :]
    )
    return ComponentSet(tuple(domains), mu, alpha, beta, gamma, theta - fitted)


def fit_least_squares(grid: SlopeGrid, weighted: bool = False) -> ComponentSet:
    """Components from the constrained-basis (weighted) least-squares fit of the full model."""
    theta = complete_theta(grid)
    design = build_design(*theta.shape)
    weights = _weights(grid).ravel() if weighted else None
    fit = solve_least_squares(design.matrix(CANONICAL_ORDER), theta.ravel(), weights)
    return components_from_coefficients(design, fit.coefficients, theta, grid.domains)


def fit_wls(grid: SlopeGrid) -> tuple[ComponentSet, VarianceTable]:
    """Inverse-variance weighted fit (w = 1/se²) and its weighted Type I table."""
    components = fit_least_squares(grid, weighted=True)
    table = variance_decomposition(
        grid, CANONICAL_ORDER, DecompositionType.I, weighted=True
    )
    return components, table
