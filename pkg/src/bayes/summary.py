"""Posterior summaries and the comparison with least-squares domain intercepts."""

from __future__ import annotations

import numpy as np
import polars as pl

from src.bayes.nuts import PosteriorDraws
from src.decomp.components import ComponentSet
from src.errors import DataError


def summarize_values(names: tuple[str, ...] | list[str], values: np.ndarray) -> pl.DataFrame:
    """Mean, sd and the equal-tailed 95% interval of each column of (draws × P) values."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] == 0:
        raise DataError("Cannot summarize an empty set of draws")
    lower, upper = np.percentile(values, [2.5, 97.5], axis=0)
    return pl.DataFrame(
        {
            "parameter": list(names),
            "mean": values.mean(axis=0),
            "sd": values.std(axis=0, ddof=1) if values.shape[0] > 1 else np.zeros(values.shape[1]),
            "ci_lower": lower,
            "ci_upper": upper,
        }
    )


def summarize(draws: PosteriorDraws) -> pl.DataFrame:
    return summarize_values(
        draws.parameter_names, draws.values.reshape(-1, draws.values.shape[2])
    )


def compare_domain_intercepts(
    summary: pl.DataFrame, frequentist: ComponentSet
) -> pl.DataFrame:
    """Bayesian α_d next to the least-squares α_d, with the absolute discrepancy."""
    freq = pl.DataFrame(
        {
            "parameter": [f"alpha[{d}]" for d in frequentist.domains],
            "domain": list(frequentist.domains),
            "frequentist": frequentist.alpha,
        }
    )
    return (
        freq.join(summary, on="parameter", how="left")
        .select(
            "domain",
            pl.col("mean").alias("bayes_mean"),
            "ci_lower",
            "ci_upper",
            "frequentist",
            (pl.col("mean") - pl.col("frequentist")).abs().alias("abs_diff"),
        )
    )
