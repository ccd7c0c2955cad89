"""Summary helpers for silver trade and market models."""

from __future__ import annotations

import polars as pl

from src.common.models import Market, Trade
from src.constants import Outcome


def get_trade_summary(models_df: Trade | pl.DataFrame) -> dict[str, int]:
    """Row counts of a trade model frame."""
    return (
        models_df.lazy()
        .select(
            pl.len().alias("total_trades"),
            Trade.market_id.drop_nulls().len().alias("with_market_id"),
            Trade.price.drop_nulls().len().alias("with_price"),
            Trade.count.drop_nulls().len().alias("with_count"),
            Trade.timestamp.drop_nulls().len().alias("with_timestamp"),
            (Trade.validation_errors.list.len() == 0).sum().alias("valid"),
        )
        .collect()
        .to_dicts()[0]
    )


def get_market_summary(models_df: Market | pl.DataFrame) -> dict[str, int]:
    """Row counts of a market model frame, split by resolution."""
    return (
        models_df.lazy()
        .select(
            pl.len().alias("total_markets"),
            Market.event_ticker.drop_nulls().len().alias("with_event_ticker"),
            Market.title.drop_nulls().len().alias("with_title"),
            (Market.outcome == Outcome.YES.value).sum().alias("resolved_yes"),
            (Market.outcome == Outcome.NO.value).sum().alias("resolved_no"),
            (Market.outcome == Outcome.UNRESOLVED.value).sum().alias("unresolved"),
            (Market.validation_errors.list.len() == 0).sum().alias("valid"),
        )
        .collect()
        .to_dicts()[0]
    )
