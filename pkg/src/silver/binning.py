"""Placement of trades into horizon and size bins (left-closed, right-open)."""

from __future__ import annotations

from bisect import bisect_right

import polars as pl

from das.engine.polars.functions.datetime import MS_PER_HOUR, bin_index, hours_between
from src.common.models import MarketRecord, TradeRecord
from src.config import BinningConfig
from src.errors import NegativeHorizonError


def horizon_hours(trade: TradeRecord, market: MarketRecord) -> float:
    return (market.close_time - trade.timestamp) / MS_PER_HOUR


def bin_trade(
    trade: TradeRecord, market: MarketRecord, cfg: BinningConfig
) -> tuple[int, int]:
    """(horizon_bin, size_bin) of one trade; raises NegativeHorizonError after close."""
    tau = horizon_hours(trade, market)
    if tau < 0:
        raise NegativeHorizonError(
            f"Trade on {trade.market_id} executed {-tau:.3f}h after market close"
        )
    return (
        bisect_right(cfg.horizon_edges_hours, tau),
        bisect_right(cfg.size_edges, trade.count),
    )


def with_bins(
    lf: pl.LazyFrame,
    cfg: BinningConfig,
    timestamp: str = "timestamp",
    close_time: str = "close_time",
    count: str = "count",
) -> pl.LazyFrame:
    """Add `horizon_hours`, `horizon_bin` and `size_bin`; negative horizons are left in place."""
    return lf.with_columns(
        hours_between(pl.col(timestamp), pl.col(close_time)).alias("horizon_hours")
    ).with_columns(
        bin_index(pl.col("horizon_hours"), list(cfg.horizon_edges_hours)).alias(
            "horizon_bin"
        ),
        bin_index(pl.col(count), [float(e) for e in cfg.size_edges]).alias("size_bin"),
    )
