"""
Synthetic markets and trades whose recalibration slope is known by construction.

For a market in cell (d, τ, s) with target slope θ and intercept a*:
  latent truth q from the latent law (logit-normal by default),
  one outcome y ~ Bernoulli(q) for the market,
  base price logit(p) = (logit(q) − a*)/θ, so that P(y = 1 | p) = σ(a* + θ·logit(p)).
Each trade jitters the base price on the logit scale, rounds it to whole cents in
[5, 95], takes a contract count inside size bin s from the count law and a
timestamp at the midpoint of horizon bin τ before the market close. The number
of trades per market follows the trades-per-market law.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import polars as pl
from scipy.special import expit

from das.engine.polars.functions.datetime import MS_PER_HOUR
from das.logger import log_debug, log_info, log_warn
from src.bronze.loader import MARKET_COLUMNS, RULE_COLUMNS, TRADE_COLUMNS
from src.common.grid import CellData, CellKey
from src.config import BinningConfig
from src.constants import MatchKind, Outcome, Side
from src.decomp.components import ComponentSet
from src.errors import ConfigError
from src.synth.spec import SynthSpec

CLOSE_TIME_MS = 1_767_225_600_000  # 2026-01-01T00:00:00Z
PRICE_FLOOR_CENTS = 5
PRICE_CEIL_CENTS = 95
MAX_CLAMPED_FRACTION = 0.20


def horizon_midpoints(binning: BinningConfig) -> np.ndarray:
    """Midpoint of every horizon bin; the open last bin uses 1.5× its lower edge."""
    edges = [0.0, *binning.horizon_edges_hours]
    mids = [(lo + hi) / 2.0 for lo, hi in zip(edges, edges[1:])]
    mids.append(1.5 * edges[-1] if edges[-1] > 0 else 1.0)
    return np.asarray(mids)


def size_ranges(binning: BinningConfig, max_contracts: int) -> list[tuple[int, int]]:
    lows = [1, *binning.size_edges]
    highs = [edge - 1 for edge in binning.size_edges] + [max_contracts]
    return list(zip(lows, highs))


def event_ticker(key: CellKey) -> str:
    return f"SYN-{key.domain}-{key.horizon_bin}-{key.size_bin}"


def domain_prefix(domain: str) -> str:
    return f"SYN-{domain}-"


@dataclass(frozen=True)
class CellSample:
    cell: CellData
    market_outcome: np.ndarray  # one per market
    clamped: int


def generate_cell(
    key: CellKey,
    theta: float,
    spec: SynthSpec,
    rng: np.random.Generator,
    horizon_hours: float,
    counts: tuple[int, int],
) -> CellSample:
    if not theta > 0:
        raise ConfigError(f"Target slope for {key} must be positive, got {theta}")
    n_markets = spec.markets_per_cell
    logit_q = spec.latent_prob_law.draw_logit(rng, n_markets)
    market_outcome = (rng.uniform(size=n_markets) < expit(logit_q)).astype(np.int8)
    per_market = spec.trades_per_market.draw(rng, n_markets)
    n = int(per_market.sum())
    base = (logit_q - spec.intercept_for(key)) / theta
    x = np.repeat(base, per_market) + spec.price_jitter_sd * rng.standard_normal(n)
    cents = np.rint(100.0 * expit(x))
    clamped = int(np.sum((cents < PRICE_FLOOR_CENTS) | (cents > PRICE_CEIL_CENTS)))
    ticker = event_ticker(key)
    market_ids = np.array(
        [f"{ticker}-{j:06d}" for j in range(n_markets)], dtype=object
    )
    cell = CellData.from_arrays(
        key,
        price=np.clip(cents, PRICE_FLOOR_CENTS, PRICE_CEIL_CENTS).astype(np.int64),
        outcome=np.repeat(market_outcome, per_market),
        contract_count=spec.contract_count_law.draw(rng, *counts, n),
        market_id=np.repeat(market_ids, per_market),
        horizon_hours=np.full(n, horizon_hours),
    )
    return CellSample(cell, market_outcome, clamped)


@dataclass(frozen=True)
class SyntheticDataset:
    spec: SynthSpec
    components: ComponentSet
    cells: dict[CellKey, CellData]
    market_outcomes: dict[CellKey, np.ndarray]
    clamped_fraction: float

    @property
    def target_theta(self) -> np.ndarray:
        return self.components.predict()

    def trades_frame(self) -> pl.DataFrame:
        frames = [
            pl.DataFrame(
                {
                    "market_id": cell.market_id.astype(str),
                    "price_cents": cell.price,
                    "count": cell.contract_count,
                    "side": [Side.YES.value] * cell.n,
                    "timestamp_ms": CLOSE_TIME_MS
                    - np.rint(cell.horizon_hours * MS_PER_HOUR).astype(np.int64),
                }
            )
            for cell in self.cells.values()
        ]
        return pl.concat(frames).select(TRADE_COLUMNS)

    def markets_frame(self) -> pl.DataFrame:
        frames = []
        for key, outcomes in self.market_outcomes.items():
            ticker = event_ticker(key)
            frames.append(
                pl.DataFrame(
                    {
                        "market_id": [f"{ticker}-{j:06d}" for j in range(outcomes.size)],
                        "event_ticker": [ticker] * outcomes.size,
                        "title": [
                            f"Synthetic {key.domain} market {j}" for j in range(outcomes.size)
                        ],
                        "close_time_ms": [CLOSE_TIME_MS] * outcomes.size,
                        "outcome": [
                            Outcome.YES.value if y else Outcome.NO.value for y in outcomes
                        ],
                    }
                )
            )
        return pl.concat(frames).select(MARKET_COLUMNS)

    def rules_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "match_kind": [MatchKind.TICKER_PREFIX.value] * len(self.spec.domains),
                "pattern": [domain_prefix(d) for d in self.spec.domains],
                "domain": list(self.spec.domains),
            }
        ).select(RULE_COLUMNS)

    def truth_frame(self) -> pl.DataFrame:
        theta = self.target_theta
        keys = list(self.cells)
        return pl.DataFrame(
            {
                "domain": [k.domain for k in keys],
                "horizon_bin": [k.horizon_bin for k in keys],
                "size_bin": [k.size_bin for k in keys],
                "theta": [
                    float(theta[self.spec.domains.index(k.domain), k.horizon_bin, k.size_bin])
                    for k in keys
                ],
                "intercept": [self.spec.intercept_for(k) for k in keys],
            }
        )

    def frames(self) -> dict[str, pl.DataFrame]:
        """Artifact name → frame: trades, markets and rules in the ingest schemas, true slopes."""
        return {
            "trades.csv": self.trades_frame(),
            "markets.csv": self.markets_frame(),
            "rules.csv": self.rules_frame(),
            "truth.csv": self.truth_frame(),
        }


def generate(spec: SynthSpec, threads: int = 1) -> SyntheticDataset:
    """Generate every requested cell; output order follows the sorted cell keys."""
    components = spec.components()
    theta = components.predict()
    if np.any(theta <= 0):
        d, t, s = np.argwhere(theta <= 0)[0]
        raise ConfigError(
            f"Target slope must be positive; cell ({spec.domains[d]}, {t}, {s}) "
            f"has {theta[d, t, s]:.4f}"
        )
    mids = horizon_midpoints(spec.binning)
    ranges = size_ranges(spec.binning, spec.contract_count_law.max_contracts)
    keys = spec.cell_keys()
    # stream index from the position in the full grid, so subsets reproduce the same cells
    _, n_horizon, n_size = spec.shape

    def one(key: CellKey) -> CellSample:
        index = (spec.domains.index(key.domain) * n_horizon + key.horizon_bin) * n_size + key.size_bin
        return generate_cell(
            key,
            float(theta[spec.domains.index(key.domain), key.horizon_bin, key.size_bin]),
            spec,
            spec.rng(2, index),
            float(mids[key.horizon_bin]),
            ranges[key.size_bin],
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(one, keys))
    else:
        samples = [one(key) for key in keys]

    total = sum(s.cell.n for s in samples)
    clamped = sum(s.clamped for s in samples)
    fraction = clamped / total if total else 0.0
    for sample in samples:
        if sample.clamped:
            log_debug(f"{sample.cell.key}: {sample.clamped} prices clamped")
    if fraction > MAX_CLAMPED_FRACTION:
        log_warn(
            f"{fraction:.1%} of synthetic prices were clamped to "
            f"[{PRICE_FLOOR_CENTS}, {PRICE_CEIL_CENTS}] cents; target slopes are too extreme "
            "for the latent probability law"
        )
    log_info(f"Generated {total} trades over {len(keys)} cells")
    return SyntheticDataset(
        spec=spec,
        components=components,
        cells={s.cell.key: s.cell for s in samples},
        market_outcomes={s.cell.key: s.market_outcome for s in samples},
        clamped_fraction=fraction,
    )
