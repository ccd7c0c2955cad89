"""Conversions between result objects and the CSV artifact tables."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import polars as pl

from src.bayes.nuts import PosteriorDraws
from src.calib.analyses import GroupFits, WeightingGap
from src.calib.fitter import CellFits
from src.common.grid import CellKey, SlopeGrid
from src.decomp.components import ComponentSet
from src.decomp.scale import ScaleEffect
from src.errors import ConfigError, DataError

CELL_SCHEMA = {
    "domain": pl.String,
    "horizon_bin": pl.Int64,
    "size_bin": pl.Int64,
    "n": pl.Int64,
    "effective_weight": pl.Float64,
    "a": pl.Float64,
    "b": pl.Float64,
    "se_a": pl.Float64,
    "se_b": pl.Float64,
    "loglik": pl.Float64,
    "converged": pl.Boolean,
    "iterations": pl.Int64,
}


def cells_frame(cell_fits: CellFits, domains: list[str] | tuple[str, ...]) -> pl.DataFrame:
    """One row per fitted cell, domains in grid order."""
    order = {d: i for i, d in enumerate(domains)}
    keys = sorted(
        (k for k in cell_fits.fits if k.domain in order),
        key=lambda k: (order[k.domain], k.horizon_bin, k.size_bin),
    )
    rows = []
    for key in keys:
        fit = cell_fits.fits[key]
        rows.append(
            {
                "domain": key.domain,
                "horizon_bin": key.horizon_bin,
                "size_bin": key.size_bin,
                "n": fit.n,
                "effective_weight": fit.effective_weight,
                "a": fit.a,
                "b": fit.b,
                "se_a": fit.se_a,
                "se_b": fit.se_b,
                "loglik": fit.loglik,
                "converged": fit.converged,
                "iterations": fit.iterations,
            }
        )
    return pl.DataFrame(rows, schema=CELL_SCHEMA)


def failures_frame(cell_fits: CellFits) -> pl.DataFrame:
    keys = sorted(cell_fits.failures)
    return pl.DataFrame(
        {
            "domain": [k.domain for k in keys],
            "horizon_bin": [k.horizon_bin for k in keys],
            "size_bin": [k.size_bin for k in keys],
            "reason": [cell_fits.failures[k] for k in keys],
        },
        schema={
            "domain": pl.String,
            "horizon_bin": pl.Int64,
            "size_bin": pl.Int64,
            "reason": pl.String,
        },
    )


def grid_from_cells_frame(
    df: pl.DataFrame, n_horizon: int = 9, n_size: int = 4
) -> SlopeGrid:
    """Slope grid from a cells table; domains keep their first-appearance order."""
    missing = {"domain", "horizon_bin", "size_bin", "b"} - set(df.columns)
    if missing:
        raise DataError(f"Cells table lacks columns {sorted(missing)}")
    se = df["se_b"] if "se_b" in df.columns else pl.Series([np.nan] * df.height)
    n = df["n"] if "n" in df.columns else pl.Series([0] * df.height)
    entries = {
        CellKey(row["domain"], int(row["horizon_bin"]), int(row["size_bin"])): (
            float(row["b"]),
            float(s) if s is not None else np.nan,
            int(c) if c is not None else 0,
        )
        for row, s, c in zip(df.iter_rows(named=True), se, n, strict=True)
    }
    domains = df["domain"].unique(maintain_order=True).to_list()
    return SlopeGrid.from_entries(entries, domains, n_horizon, n_size)


def read_cells(path: Path, n_horizon: int = 9, n_size: int = 4) -> SlopeGrid:
    if not path.is_file():
        raise ConfigError(f"Cells file does not exist: {path} (run fit-cells first)")
    return grid_from_cells_frame(pl.read_csv(path), n_horizon, n_size)


def components_frame(components: ComponentSet) -> pl.DataFrame:
    """Long table: component, domain, horizon_bin, size_bin (null where not indexed), value."""
    rows: list[tuple[str, str | None, int | None, int | None, float]] = []
    rows += [("mu", None, t, None, float(v)) for t, v in enumerate(components.mu)]
    rows += [("alpha", d, None, None, float(v)) for d, v in zip(components.domains, components.alpha)]
    for i, domain in enumerate(components.domains):
        rows += [("beta", domain, t, None, float(v)) for t, v in enumerate(components.beta[i])]
    for i, domain in enumerate(components.domains):
        rows += [("gamma", domain, None, s, float(v)) for s, v in enumerate(components.gamma[i])]
    return pl.DataFrame(
        rows,
        schema={
            "component": pl.String,
            "domain": pl.String,
            "horizon_bin": pl.Int64,
            "size_bin": pl.Int64,
            "value": pl.Float64,
        },
        orient="row",
    )


def augmented_frame(grid: SlopeGrid, components: ComponentSet) -> pl.DataFrame:
    """Observed slopes with every fitted component and the residual per cell."""
    n_domains, n_horizon, n_size = grid.shape
    d, t, s = (a.ravel() for a in np.indices((n_domains, n_horizon, n_size)))
    fitted = components.fitted()
    return pl.DataFrame(
        {
            "domain": [grid.domains[i] for i in d],
            "horizon_bin": t.astype(np.int64),
            "size_bin": s.astype(np.int64),
            "n": grid.n[d, t, s].astype(np.int64),
            "theta": grid.theta[d, t, s],
            "se": grid.se[d, t, s],
            "mu": components.mu[t],
            "alpha": components.alpha[d],
            "beta": components.beta[d, t],
            "gamma": components.gamma[d, s],
            "fitted": fitted[d, t, s],
            "residual": components.residual[d, t, s],
        }
    )


def horizon_curve_frame(curve: dict[int, tuple[float, int]]) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "horizon_bin": list(curve),
            "mu": [v[0] for v in curve.values()],
            "cells": [v[1] for v in curve.values()],
        },
        schema={"horizon_bin": pl.Int64, "mu": pl.Float64, "cells": pl.Int64},
    )


def scale_effect_frame(effects: list[ScaleEffect]) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "domain": [e.domain for e in effects],
            "variant": [e.variant.value for e in effects],
            "size_lo": [e.size_lo for e in effects],
            "size_hi": [e.size_hi for e in effects],
            "delta": [e.delta for e in effects],
            "horizon_diffs": [
                ";".join(f"{v:.6g}" for v in e.per_horizon_diffs) for e in effects
            ],
        },
        schema={
            "domain": pl.String,
            "variant": pl.String,
            "size_lo": pl.Int64,
            "size_hi": pl.Int64,
            "delta": pl.Float64,
            "horizon_diffs": pl.String,
        },
    )


def draws_from_frame(df: pl.DataFrame) -> PosteriorDraws:
    """Draws read back from draws.csv; sampler statistics are not part of that file."""
    if not {"chain", "iter"} <= set(df.columns):
        raise DataError("Draws table needs chain and iter columns")
    df = df.sort("chain", "iter")
    names = tuple(c for c in df.columns if c not in ("chain", "iter"))
    chains = df["chain"].n_unique()
    keep = df.height // max(chains, 1)
    if chains * keep != df.height:
        raise DataError("Draws table has chains of unequal length")
    values = df.select(names).to_numpy().reshape(chains, keep, len(names))
    zeros = np.zeros((chains, keep))
    return PosteriorDraws(
        parameter_names=names,
        values=values,
        accept_stat=zeros,
        tree_depth=zeros.astype(np.int64),
        n_leapfrog=zeros.astype(np.int64),
        divergent=zeros.astype(bool),
        energy=np.full((chains, keep), np.nan),
        step_size=np.full(chains, np.nan),
        inv_metric=np.empty((chains, 0)),
    )


def read_draws(path: Path) -> PosteriorDraws:
    if not path.is_file():
        raise ConfigError(f"Draws file does not exist: {path} (run bayes first)")
    return draws_from_frame(pl.read_csv(path))


def group_fits_frame(groups: GroupFits, label: str = "label") -> pl.DataFrame:
    """Fitted groups with their slope, failed groups with the reason."""
    labels = sorted({*groups.fits, *groups.failures})
    fits = [groups.fits.get(g) for g in labels]
    return pl.DataFrame(
        {
            label: labels,
            "n": [f.n if f else None for f in fits],
            "a": [f.a if f else None for f in fits],
            "b": [f.b if f else None for f in fits],
            "se_b": [f.se_b if f else None for f in fits],
            "error": [groups.failures.get(g) for g in labels],
        },
        schema={
            label: pl.String,
            "n": pl.Int64,
            "a": pl.Float64,
            "b": pl.Float64,
            "se_b": pl.Float64,
            "error": pl.String,
        },
    )


def weighting_gap_frame(gaps: dict[str, WeightingGap]) -> pl.DataFrame:
    rows = [
        {"domain": domain, "horizon_bin": t, "gap": value}
        for domain, gap in gaps.items()
        for t, value in sorted(gap.gaps.items())
    ]
    return pl.DataFrame(
        rows, schema={"domain": pl.String, "horizon_bin": pl.Int64, "gap": pl.Float64}
    )
