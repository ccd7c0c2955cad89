"""Sources Trade: bronze trade rows with typed columns next to their raw text.

Typed columns are null when the raw value does not parse; the raw value is kept
so model validation can tell a missing value from an unparseable one.
"""

import polars as pl

from das.engine.polars.functions.string import lowercase_values, parse_integer

RAW_SUFFIX = "_raw"


def get_trade(bronze_df: pl.DataFrame) -> pl.LazyFrame:
    """Get sources trades from a bronze trades frame."""
    return bronze_df.lazy().select(
        pl.col("line"),
        pl.col("parse_error"),
        pl.col("market_id"),
        parse_integer(pl.col("price_cents")).alias("price"),
        parse_integer(pl.col("count")).alias("count"),
        lowercase_values(pl.col("side")).alias("side"),
        parse_integer(pl.col("timestamp_ms")).alias("timestamp"),
        pl.col("price_cents").alias(f"price{RAW_SUFFIX}"),
        pl.col("count").alias(f"count{RAW_SUFFIX}"),
        pl.col("timestamp_ms").alias(f"timestamp{RAW_SUFFIX}"),
    )
