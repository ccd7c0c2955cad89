"""Posterior predictive check of every observed cell slope."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import polars as pl

from das.logger import log_info
from src.bayes.model import BayesModelSpec
from src.bayes.nuts import PosteriorDraws
from src.common.grid import SlopeGrid
from src.errors import DataError


@dataclass(frozen=True)
class PPCResult:
    cells: pl.DataFrame  # domain, horizon_bin, size_bin, observed, lower, upper, within, ppc_p
    domain_coverage: pl.DataFrame
    overall_coverage: float

    def outside(self) -> pl.DataFrame:
        return self.cells.filter(~pl.col("within"))


def _stack(draws: PosteriorDraws, prefix: str) -> np.ndarray:
    columns = [i for i, n in enumerate(draws.parameter_names) if n.startswith(prefix + "[")]
    return draws.values.reshape(-1, draws.values.shape[2])[:, columns]


def posterior_predictive(
    draws: PosteriorDraws,
    grid: SlopeGrid,
    spec: BayesModelSpec | None = None,
    seed: int = 0,
    level: float = 0.95,
) -> PPCResult:
    """
    One replicate θ_rep per kept draw and cell from Normal(cell mean, σ²) of that draw.
    `ppc_p` is the fraction of replicates above the observed slope.
    """
    spec = spec or BayesModelSpec()
    n_domains, n_horizon, n_size = grid.shape
    s_tilde = spec.centred_log_sizes
    mu = _stack(draws, "mu")
    alpha = _stack(draws, "alpha")
    beta = _stack(draws, "beta")
    delta = _stack(draws, "delta")
    if (
        mu.shape[1] != n_horizon
        or alpha.shape[1] != n_domains
        or beta.shape[1] != n_domains * n_horizon
        or s_tilde.size != n_size
    ):
        raise DataError("Posterior draws do not match the grid dimensions")
    beta = beta.reshape(-1, n_domains, n_horizon)
    sigma = draws.values.reshape(-1, draws.values.shape[2])[
        :, draws.parameter_names.index("sigma")
    ]

    means = (
        mu[:, None, :, None]
        + alpha[:, :, None, None]
        + beta[:, :, :, None]
        + delta[:, :, None, None] * s_tilde[None, None, None, :]
    )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    replicates = means + sigma[:, None, None, None] * rng.standard_normal(means.shape)

    tail = 50.0 * (1.0 - level)
    lower, upper = np.percentile(replicates, [tail, 100.0 - tail], axis=0)
    observed = grid.theta
    ppc_p = (replicates > observed[None]).mean(axis=0)
    present = ~np.isnan(observed)
    within = (observed >= lower) & (observed <= upper)

    d_idx, t_idx, s_idx = np.nonzero(present)
    cells = pl.DataFrame(
        {
            "domain": [grid.domains[d] for d in d_idx],
            "horizon_bin": t_idx,
            "size_bin": s_idx,
            "observed": observed[present],
            "lower": lower[present],
            "upper": upper[present],
            "within": within[present],
            "ppc_p": ppc_p[present],
        }
    )
    domain_coverage = (
        cells.group_by("domain", maintain_order=True)
        .agg(
            pl.col("within").sum().alias("within"),
            pl.len().alias("cells"),
            pl.col("within").mean().alias("coverage"),
        )
    )
    overall = float(cells["within"].mean()) if cells.height else float("nan")
    log_info(f"Posterior predictive coverage {overall:.1%} over {cells.height} cells")
    return PPCResult(cells, domain_coverage, overall)
