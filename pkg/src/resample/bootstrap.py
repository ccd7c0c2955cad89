"""Percentile bootstrap of the within-horizon scale effect.

Every replicate draws from its own counter-derived stream, so results are
identical for any thread count.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import polars as pl

from das.logger import log_info, log_warn
from src.calib.fitter import fit_recalibration
from src.common.grid import CellData, CellKey
from src.config import BootstrapConfig, FitConfig
from src.constants import BootstrapMethod
from src.errors import MissingCellError, NumericalError, UnstableBootstrapError

MAX_FAILED_FRACTION = 0.10

Resampler = Callable[[np.random.Generator], list[CellData]]


@dataclass(frozen=True)
class IntervalEstimate:
    domain: str
    method: BootstrapMethod
    confidence: float
    point: float
    lower: float
    upper: float
    replicate_values: np.ndarray
    failed_replicates: int

    @property
    def replicates(self) -> int:
        return int(self.replicate_values.size) + self.failed_replicates

    @property
    def width(self) -> float:
        return self.upper - self.lower


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,)))
    )


def relevant_cells(
    cells: Mapping[CellKey, CellData],
    domain: str,
    n_horizon: int,
    size_lo: int,
    size_hi: int,
) -> list[CellData]:
    """The (τ, lo) and (τ, hi) cells of one domain for every horizon bin, τ-major."""
    out = []
    for t in range(n_horizon):
        for s in (size_lo, size_hi):
            key = CellKey(domain, t, s)
            if key not in cells:
                raise MissingCellError(f"Missing cell ({domain}, {t}, {s})")
            out.append(cells[key])
    return out


def delta_from_cells(selected: list[CellData], fit_cfg: FitConfig) -> float:
    """Mean of θ(τ, hi) − θ(τ, lo) over the τ-major (lo, hi) pairs."""
    slopes = np.array([fit_recalibration(c, fit_cfg).b for c in selected])
    return float(np.mean(slopes[1::2] - slopes[0::2]))


def cell_level_resampler(selected: list[CellData]) -> Resampler:
    def resample(rng: np.random.Generator) -> list[CellData]:
        return [c.take(rng.integers(0, c.n, size=c.n)) for c in selected]

    return resample


def market_clustered_resampler(selected: list[CellData]) -> Resampler:
    """Draw the domain's markets with replacement; every trade of a drawn market follows it."""
    markets = np.unique(np.concatenate([c.market_id for c in selected]).astype(str))
    lookup = {m: i for i, m in enumerate(markets)}
    market_index = [
        np.fromiter((lookup[str(m)] for m in c.market_id), dtype=np.int64, count=c.n)
        for c in selected
    ]

    def resample(rng: np.random.Generator) -> list[CellData]:
        draws = rng.integers(0, markets.size, size=markets.size)
        multiplicity = np.bincount(draws, minlength=markets.size)
        return [
            c.take(np.repeat(np.arange(c.n), multiplicity[idx]))
            for c, idx in zip(selected, market_index, strict=True)
        ]

    return resample


def percentile_interval(values: np.ndarray, confidence: float) -> tuple[float, float]:
    alpha = 1.0 - confidence
    lower, upper = np.percentile(values, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(lower), float(upper)


def bootstrap_scale_effect(
    cells: Mapping[CellKey, CellData],
    domain: str,
    cfg: BootstrapConfig,
    fit_cfg: FitConfig,
    n_horizon: int = 9,
    size_lo: int = 0,
    size_hi: int = 3,
    threads: int = 1,
) -> IntervalEstimate:
    """
    Percentile interval of Δ_d. Replicates whose refit degenerates are counted and
    excluded; more than 10% failures raise UnstableBootstrapError.
    """
    selected = relevant_cells(cells, domain, n_horizon, size_lo, size_hi)
    point = delta_from_cells(selected, fit_cfg)
    resample = (
        cell_level_resampler(selected)
        if cfg.method == BootstrapMethod.CELL_LEVEL
        else market_clustered_resampler(selected)
    )

    def replicate(index: int) -> float | None:
        try:
            return delta_from_cells(resample(replicate_rng(cfg.seed, index)), fit_cfg)
        except NumericalError:
            return None

    indices = range(cfg.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(replicate, indices))
    else:
        results = [replicate(i) for i in indices]

    values = np.array([r for r in results if r is not None], dtype=np.float64)
    failed = cfg.replicates - values.size
    if failed > MAX_FAILED_FRACTION * cfg.replicates:
        raise UnstableBootstrapError(
            f"{failed} of {cfg.replicates} {cfg.method.value} replicates failed for {domain}"
        )
    if failed:
        log_warn(f"{domain}: {failed} of {cfg.replicates} replicates failed and were excluded")
    lower, upper = percentile_interval(values, cfg.confidence)
    log_info(
        f"{domain} {cfg.method.value}: Δ={point:.4f} "
        f"[{lower:.4f}, {upper:.4f}] from {values.size} replicates"
    )
    return IntervalEstimate(
        domain=domain,
        method=cfg.method,
        confidence=cfg.confidence,
        point=point,
        lower=lower,
        upper=upper,
        replicate_values=values,
        failed_replicates=failed,
    )


def intervals_frame(estimates: list[IntervalEstimate]) -> pl.DataFrame:
    """Report rows: domain, method, B, point, lower, upper, failed."""
    return pl.DataFrame(
        {
            "domain": [e.domain for e in estimates],
            "method": [e.method.value for e in estimates],
            "B": [e.replicates for e in estimates],
            "point": [e.point for e in estimates],
            "lower": [e.lower for e in estimates],
            "upper": [e.upper for e in estimates],
            "failed": [e.failed_replicates for e in estimates],
        },
        schema={
            "domain": pl.String,
            "method": pl.String,
            "B": pl.Int64,
            "point": pl.Float64,
            "lower": pl.Float64,
            "upper": pl.Float64,
            "failed": pl.Int64,
        },
    )
