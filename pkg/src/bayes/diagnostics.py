"""Convergence diagnostics: rank-normalized split R̂, bulk ESS and E-BFMI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import polars as pl
from scipy import stats

from das.logger import log_info, log_warn
from src.bayes.nuts import PosteriorDraws
from src.errors import DataError

RHAT_WARN = 1.01
BFMI_WARN = 0.3


def _check_shape(chains: np.ndarray) -> np.ndarray:
    chains = np.asarray(chains, dtype=np.float64)
    if chains.ndim != 2 or chains.shape[0] < 2 or chains.shape[1] < 4:
        raise DataError(
            f"Diagnostics need at least 2 chains of 4 draws, got shape {chains.shape}"
        )
    return chains


def split_chains(chains: np.ndarray) -> np.ndarray:
    """Each chain cut into its first and last halves, stacked as separate chains."""
    half = chains.shape[1] // 2
    return np.vstack((chains[:, :half], chains[:, -half:]))


def z_scale(chains: np.ndarray) -> np.ndarray:
    """Normal scores of the pooled ranks (average ranks for ties)."""
    ranks = stats.rankdata(chains, method="average", axis=None).reshape(chains.shape)
    return stats.norm.ppf((ranks - 0.5) / chains.size)


def _is_constant(chains: np.ndarray) -> bool:
    return bool(np.ptp(chains) == 0.0) or bool(np.any(np.ptp(chains, axis=1) == 0.0))


def gelman_rubin(chains: np.ndarray) -> float:
    """Potential scale reduction of already-prepared chains."""
    n = chains.shape[1]
    within = float(np.mean(np.var(chains, axis=1, ddof=1)))
    if within == 0.0:
        return float("nan")
    between = n * float(np.var(np.mean(chains, axis=1), ddof=1))
    var_plus = (n - 1) / n * within + between / n
    return float(np.sqrt(var_plus / within))


def split_rhat(chains: np.ndarray) -> float:
    """
    Rank-normalized split R̂: the larger of the bulk value (z-scores of ranks)
    and the tail value (z-scores of ranks of |x − median|).
    A constant chain leaves R̂ undefined and NaN is returned.
    """
    chains = _check_shape(chains)
    if _is_constant(chains):
        return float("nan")
    bulk = gelman_rubin(z_scale(split_chains(chains)))
    folded = np.abs(chains - np.median(chains))
    tail = gelman_rubin(z_scale(split_chains(folded)))
    return max(bulk, tail)


def autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance at every lag, via zero-padded FFT."""
    n = x.size
    centred = x - x.mean()
    n_fft = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, n_fft)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), n_fft)[:n] / n


def effective_sample_size(chains: np.ndarray) -> float:
    """
    Multi-chain ESS with Geyer's initial positive sequence truncation followed
    by the initial monotone sequence correction.
    """
    n_chain, n_draw = chains.shape
    acov = np.asarray([autocovariance(chain) for chain in chains])
    mean_var = float(np.mean(acov[:, 0])) * n_draw / (n_draw - 1.0)
    var_plus = mean_var * (n_draw - 1.0) / n_draw
    if n_chain > 1:
        var_plus += float(np.var(chains.mean(axis=1), ddof=1))

    rho = np.zeros(n_draw)
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - np.mean(acov[:, 1])) / var_plus
    rho[0], rho[1] = rho_even, rho_odd

    t = 1
    while t < n_draw - 2 and rho_even + rho_odd >= 0.0:
        rho_even = 1.0 - (mean_var - np.mean(acov[:, t + 1])) / var_plus
        rho_odd = 1.0 - (mean_var - np.mean(acov[:, t + 2])) / var_plus
        rho[t + 1] = rho_even
        if rho_even + rho_odd >= 0.0:
            rho[t + 2] = rho_odd
        t += 2
    max_t = t

    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2

    tau = -1.0 + 2.0 * np.sum(rho[:max_t]) + np.sum(rho[max_t + 1 : max_t + 2])
    if np.isnan(rho).any():
        return float("nan")
    # antithetic chains can push the estimate above the draw count; it is reported capped
    total = n_chain * n_draw
    return float(min(total / tau, total))


def bulk_ess(chains: np.ndarray) -> float:
    chains = _check_shape(chains)
    if _is_constant(chains):
        return float("nan")
    return effective_sample_size(z_scale(split_chains(chains)))


def bfmi(energy: np.ndarray) -> np.ndarray:
    """Per-chain energy Bayesian fraction of missing information."""
    energy = np.atleast_2d(np.asarray(energy, dtype=np.float64))
    num = np.square(np.diff(energy, axis=1)).mean(axis=1)
    den = np.var(energy, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


@dataclass(frozen=True)
class Diagnostics:
    parameter_names: tuple[str, ...]
    rhat: np.ndarray
    ess: np.ndarray
    divergence_count: int
    divergence_warning: bool
    bfmi: np.ndarray
    total_draws: int

    @property
    def max_rhat(self) -> float:
        return float(np.nanmax(self.rhat)) if np.any(np.isfinite(self.rhat)) else float("nan")

    @property
    def min_ess(self) -> float:
        return float(np.nanmin(self.ess)) if np.any(np.isfinite(self.ess)) else float("nan")

    @property
    def undefined(self) -> list[str]:
        return [n for n, r in zip(self.parameter_names, self.rhat) if np.isnan(r)]

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "parameter": list(self.parameter_names),
                "rhat": self.rhat,
                "ess": self.ess,
            }
        )

    def summary_line(self) -> str:
        return (
            f"max_rhat={self.max_rhat:.4f} min_ess={self.min_ess:.0f} "
            f"divergences={self.divergence_count} min_bfmi={float(np.nanmin(self.bfmi)):.3f}"
        )


def diagnostics(draws: PosteriorDraws) -> Diagnostics:
    """R̂ and bulk ESS per constrained parameter plus global sampler health."""
    if draws.n_chains < 2 or draws.n_keep < 4:
        raise DataError(
            f"Diagnostics need at least 2 chains of 4 draws, got "
            f"{draws.n_chains} x {draws.n_keep}"
        )
    n_params = len(draws.parameter_names)
    rhat = np.empty(n_params)
    ess = np.empty(n_params)
    for j in range(n_params):
        chains = draws.values[:, :, j]
        rhat[j] = split_rhat(chains)
        ess[j] = bulk_ess(chains)
    result = Diagnostics(
        parameter_names=draws.parameter_names,
        rhat=rhat,
        ess=ess,
        divergence_count=draws.divergence_count,
        divergence_warning=draws.divergence_warning,
        bfmi=bfmi(draws.energy),
        total_draws=draws.n_chains * draws.n_keep,
    )
    if result.max_rhat > RHAT_WARN:
        log_warn(f"max R-hat {result.max_rhat:.4f} exceeds {RHAT_WARN}")
    if np.any(result.bfmi < BFMI_WARN):
        log_warn(f"E-BFMI below {BFMI_WARN} in at least one chain")
    log_info(result.summary_line())
    return result
