"""Sources Market: bronze market rows with typed columns next to their raw text."""

import polars as pl

from das.engine.polars.functions.string import lowercase_values, parse_integer
from src.silver.sources.trades import RAW_SUFFIX


def get_market(bronze_df: pl.DataFrame) -> pl.LazyFrame:
    """Get sources markets from a bronze markets frame."""
    return bronze_df.lazy().select(
        pl.col("line"),
        pl.col("parse_error"),
        pl.col("market_id"),
        pl.col("event_ticker"),
        pl.col("title"),
        parse_integer(pl.col("close_time_ms")).alias("close_time"),
        lowercase_values(pl.col("outcome")).alias("outcome"),
        pl.col("close_time_ms").alias(f"close_time{RAW_SUFFIX}"),
    )
