"""Trade model: typed trades with per-row validation errors."""

from __future__ import annotations

import polars as pl

from src.common.models import Trade
from src.constants import Side
from src.silver.models.validation import (
    ValidationRule,
    is_not_null,
    parsed_when_present,
    with_validation_errors,
)

PRICE_MIN_CENTS = 1
PRICE_MAX_CENTS = 99
VALID_SIDES = [side.value for side in Side]

TRADE_VALIDATION_RULES: list[ValidationRule] = [
    ValidationRule(
        name="malformed_row",
        check=lambda: pl.col("parse_error").is_null(),
        description="Line must decode into one record",
    ),
    ValidationRule(
        name="market_id_required",
        check=lambda: is_not_null("market_id"),
        description="Trade market_id must not be null",
    ),
    ValidationRule(
        name="price_required",
        check=lambda: is_not_null("price_raw"),
        description="Trade price_cents must not be null",
    ),
    ValidationRule(
        name="price_integer",
        check=lambda: parsed_when_present("price", "price_raw"),
        description="Trade price_cents must be an integer",
    ),
    ValidationRule(
        name="price_in_range",
        check=lambda: pl.col("price").is_null()
        | pl.col("price").is_between(PRICE_MIN_CENTS, PRICE_MAX_CENTS),
        description=f"Trade price must lie in [{PRICE_MIN_CENTS}, {PRICE_MAX_CENTS}] cents",
    ),
    ValidationRule(
        name="count_required",
        check=lambda: is_not_null("count_raw"),
        description="Trade count must not be null",
    ),
    ValidationRule(
        name="count_integer",
        check=lambda: parsed_when_present("count", "count_raw"),
        description="Trade count must be an integer",
    ),
    ValidationRule(
        name="count_positive",
        check=lambda: pl.col("count").is_null() | (pl.col("count") >= 1),
        description="Trade count must be at least 1 contract",
    ),
    ValidationRule(
        name="side_valid",
        check=lambda: pl.col("side").is_in(VALID_SIDES),
        description=f"Trade side must be one of: {', '.join(VALID_SIDES)}",
    ),
    ValidationRule(
        name="timestamp_required",
        check=lambda: is_not_null("timestamp_raw"),
        description="Trade timestamp_ms must not be null",
    ),
    ValidationRule(
        name="timestamp_integer",
        check=lambda: parsed_when_present("timestamp", "timestamp_raw"),
        description="Trade timestamp_ms must be integer milliseconds since epoch",
    ),
]


def get_trade(sources_lf: pl.LazyFrame) -> Trade:
    """Get the trade model from sources trades (see silver.sources.trades.get_trade)."""
    return transform(sources_lf)


def transform(sources_lf: pl.LazyFrame) -> Trade:
    model_lf = with_validation_errors(sources_lf, TRADE_VALIDATION_RULES)
    return Trade.from_df(Trade.select_columns(model_lf).collect(), validate=False)
