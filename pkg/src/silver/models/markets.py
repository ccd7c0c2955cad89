"""Market model: typed markets with per-row validation errors."""

from __future__ import annotations

import polars as pl

from src.common.models import Market
from src.constants import Outcome
from src.silver.models.validation import (
    ValidationRule,
    is_not_null,
    parsed_when_present,
    with_validation_errors,
)

VALID_OUTCOMES = [outcome.value for outcome in Outcome]

MARKET_VALIDATION_RULES: list[ValidationRule] = [
    ValidationRule(
        name="malformed_row",
        check=lambda: pl.col("parse_error").is_null(),
        description="Line must decode into one record",
    ),
    ValidationRule(
        name="market_id_required",
        check=lambda: is_not_null("market_id"),
        description="Market market_id must not be null",
    ),
    ValidationRule(
        name="market_id_unique",
        check=lambda: pl.col("market_id").is_null()
        | ~pl.col("market_id").is_duplicated(),
        description="Market market_id must appear once",
    ),
    ValidationRule(
        name="close_time_required",
        check=lambda: is_not_null("close_time_raw"),
        description="Market close_time_ms must not be null",
    ),
    ValidationRule(
        name="close_time_integer",
        check=lambda: parsed_when_present("close_time", "close_time_raw"),
        description="Market close_time_ms must be integer milliseconds since epoch",
    ),
    ValidationRule(
        name="outcome_valid",
        check=lambda: pl.col("outcome").is_in(VALID_OUTCOMES),
        description=f"Market outcome must be one of: {', '.join(VALID_OUTCOMES)}",
    ),
]


def get_market(sources_lf: pl.LazyFrame) -> Market:
    """Get the market model from sources markets (see silver.sources.markets.get_market)."""
    return transform(sources_lf)


def transform(sources_lf: pl.LazyFrame) -> Market:
    model_lf = with_validation_errors(sources_lf, MARKET_VALIDATION_RULES)
    return Market.from_df(Market.select_columns(model_lf).collect(), validate=False)
