"""Declarative description of a synthetic dataset with known calibration structure."""

from __future__ import annotations

from enum import StrEnum
from typing import Self

import numpy as np
from pydantic import Field, field_validator, model_validator
from scipy.special import logit

from src.common.grid import CellKey
from src.config import BinningConfig, StrictModel
from src.constants import DEFAULT_DOMAINS
from src.decomp.components import ComponentSet

LATENT_EPS = 1e-9


class TargetMode(StrEnum):
    CONSTANT = "constant"
    RANDOM = "random"


class TradeCountLaw(StrEnum):
    FIXED = "fixed"
    POISSON = "poisson"
    UNIFORM = "uniform"


class LatentLaw(StrEnum):
    LOGIT_NORMAL = "logit_normal"
    BETA = "beta"
    UNIFORM = "uniform"


class CountLaw(StrEnum):
    LOG_UNIFORM = "log_uniform"
    UNIFORM = "uniform"


class TradesPerMarket(StrictModel):
    """
    Trades drawn for every market: `mean` exactly (fixed), 1 + Poisson(mean − 1)
    (poisson), or an integer in [low, high] (uniform).
    """

    law: TradeCountLaw = TradeCountLaw.FIXED
    mean: float = Field(20, ge=1)
    low: int = Field(1, ge=1)
    high: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _consistent(self) -> Self:
        if self.law == TradeCountLaw.FIXED and not float(self.mean).is_integer():
            raise ValueError(f"fixed trades_per_market needs an integer mean, got {self.mean}")
        if self.law == TradeCountLaw.UNIFORM and self.low > self.high:
            raise ValueError(f"trades_per_market low ({self.low}) exceeds high ({self.high})")
        return self

    @property
    def expected(self) -> float:
        if self.law == TradeCountLaw.UNIFORM:
            return (self.low + self.high) / 2.0
        return float(self.mean)

    def draw(self, rng: np.random.Generator, n_markets: int) -> np.ndarray:
        match self.law:
            case TradeCountLaw.POISSON:
                return 1 + rng.poisson(self.mean - 1.0, size=n_markets).astype(np.int64)
            case TradeCountLaw.UNIFORM:
                return rng.integers(self.low, self.high + 1, size=n_markets, dtype=np.int64)
            case _:
                return np.full(n_markets, int(self.mean), dtype=np.int64)


class LatentProbLaw(StrictModel):
    """
    Law of the true market probability q: logit(q) ~ Normal(mean, sd), q ~ Beta(a, b),
    or q ~ Uniform(low, high).
    """

    law: LatentLaw = LatentLaw.LOGIT_NORMAL
    mean: float = 0.0
    sd: float = Field(1.2, gt=0)
    a: float = Field(2.0, gt=0)
    b: float = Field(2.0, gt=0)
    low: float = Field(0.05, gt=0, lt=1)
    high: float = Field(0.95, gt=0, lt=1)

    @model_validator(mode="after")
    def _ordered(self) -> Self:
        if self.law == LatentLaw.UNIFORM and self.low >= self.high:
            raise ValueError(f"latent low ({self.low}) must be below high ({self.high})")
        return self

    def draw_logit(self, rng: np.random.Generator, n: int) -> np.ndarray:
        match self.law:
            case LatentLaw.BETA:
                q = rng.beta(self.a, self.b, size=n)
            case LatentLaw.UNIFORM:
                q = rng.uniform(self.low, self.high, size=n)
            case _:
                return rng.normal(self.mean, self.sd, size=n)
        return logit(np.clip(q, LATENT_EPS, 1.0 - LATENT_EPS))


class ContractCountLaw(StrictModel):
    """Contract count of a trade inside its size bin; the open last bin stops at `max_contracts`."""

    law: CountLaw = CountLaw.LOG_UNIFORM
    max_contracts: int = Field(1000, ge=2)

    def draw(self, rng: np.random.Generator, lo: int, hi: int, n: int) -> np.ndarray:
        if lo == hi:
            return np.full(n, lo, dtype=np.int64)
        if self.law == CountLaw.UNIFORM:
            return rng.integers(lo, hi + 1, size=n, dtype=np.int64)
        u = rng.uniform(np.log(lo), np.log(hi + 1), size=n)
        return np.clip(np.floor(np.exp(u)).astype(np.int64), lo, hi)


class SynthSpec(StrictModel):
    """
    Target slopes come from a component set: every cell equals `theta` in constant
    mode, or a random constraint-satisfying set around `mu_mean` in random mode.
    `scale_effect` adds a linear size trend per domain whose Large − Single gap is
    the given value; `noise_sd` adds independent cell noise on top.

    Every cell shares the intercept `intercept` unless `cell_intercepts` lists its
    own as (domain, horizon_bin, size_bin, intercept). `trades_per_market` is either
    a plain count or a law table.
    """

    domains: list[str] = Field(default_factory=lambda: list(DEFAULT_DOMAINS))
    binning: BinningConfig = Field(default_factory=BinningConfig)
    mode: TargetMode = TargetMode.CONSTANT
    theta: float = 1.0
    mu_mean: float = 1.2
    component_scale: float = Field(0.2, ge=0)
    scale_effect: dict[str, float] = Field(default_factory=dict)
    noise_sd: float = Field(0.0, ge=0)
    intercept: float = 0.0
    cell_intercepts: list[tuple[str, int, int, float]] = Field(default_factory=list)
    markets_per_cell: int = Field(50, ge=1)
    trades_per_market: TradesPerMarket = Field(default_factory=TradesPerMarket)
    latent_prob_law: LatentProbLaw = Field(default_factory=LatentProbLaw)
    contract_count_law: ContractCountLaw = Field(default_factory=ContractCountLaw)
    price_jitter_sd: float = Field(0.05, ge=0)
    min_trades_per_cell: int = Field(200, ge=1)
    cells: list[tuple[str, int, int]] | None = None
    seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("trades_per_market", mode="before")
    @classmethod
    def _plain_count(cls, value: object) -> object:
        if isinstance(value, int) and not isinstance(value, bool):
            return {"law": TradeCountLaw.FIXED, "mean": value}
        return value

    @model_validator(mode="after")
    def _consistent(self) -> Self:
        expected = self.markets_per_cell * self.trades_per_market.expected
        if expected < self.min_trades_per_cell:
            raise ValueError(
                f"markets_per_cell * trades_per_market ({expected:g}) is below "
                f"min_trades_per_cell ({self.min_trades_per_cell})"
            )
        unknown = set(self.scale_effect) - set(self.domains)
        if unknown:
            raise ValueError(f"scale_effect names unknown domains {sorted(unknown)}")
        if self.contract_count_law.max_contracts <= self.binning.size_edges[-1]:
            raise ValueError("max_contracts must exceed the last size edge")
        keys = [(d, t, s) for d, t, s, _ in self.cell_intercepts]
        for domain, t, s in [*(self.cells or []), *keys]:
            if domain not in self.domains:
                raise ValueError(f"cell domain {domain!r} is not in domains")
            if not (0 <= t < self.binning.n_horizon_bins and 0 <= s < self.binning.n_size_bins):
                raise ValueError(f"cell ({domain}, {t}, {s}) is outside the grid")
        if len(set(keys)) != len(keys):
            raise ValueError("cell_intercepts lists a cell twice")
        return self

    def intercept_for(self, key: CellKey) -> float:
        for domain, t, s, value in self.cell_intercepts:
            if (domain, t, s) == (key.domain, key.horizon_bin, key.size_bin):
                return value
        return self.intercept

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.domains), self.binning.n_horizon_bins, self.binning.n_size_bins)

    def cell_keys(self) -> list[CellKey]:
        if self.cells is not None:
            return sorted(CellKey(d, t, s) for d, t, s in self.cells)
        return sorted(
            CellKey(d, t, s)
            for d in self.domains
            for t in range(self.binning.n_horizon_bins)
            for s in range(self.binning.n_size_bins)
        )

    def rng(self, *stream: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=stream))
        )

    def components(self) -> ComponentSet:
        """Target components, residual holding the cell noise."""
        _, n_horizon, n_size = self.shape
        if self.mode == TargetMode.RANDOM:
            base = ComponentSet.random(
                self.rng(0), self.domains, n_horizon, n_size,
                self.mu_mean, self.component_scale,
            )
        else:
            base = ComponentSet.without_residual(
                self.domains,
                np.full(n_horizon, self.theta),
                np.zeros(len(self.domains)),
                np.zeros((len(self.domains), n_horizon)),
                np.zeros((len(self.domains), n_size)),
            )
        gamma = base.gamma.copy()
        trend = np.linspace(-0.5, 0.5, n_size) if n_size > 1 else np.zeros(1)
        for domain, delta in self.scale_effect.items():
            gamma[self.domains.index(domain)] += delta * trend
        residual = self.noise_sd * self.rng(1).standard_normal(self.shape)
        return ComponentSet(base.domains, base.mu, base.alpha, base.beta, gamma, residual)
