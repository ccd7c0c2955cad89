"""Validation reporting helpers."""

from typing import Any

import polars as pl

from src.silver.ledger import ErrorLedger
from src.silver.models.validation import VALIDATION_ERRORS


def get_validation_summary(validated: pl.LazyFrame | pl.DataFrame) -> pl.DataFrame:
    """Rejected-row counts per rule, most frequent first (ties by rule name)."""
    return (
        validated.lazy()
        .select(pl.col(VALIDATION_ERRORS).list.explode().alias("error"))
        .filter(pl.col("error").is_not_null())
        .group_by("error")
        .agg(pl.len().alias("count"))
        .sort(["count", "error"], descending=[True, False])
        .collect()
    )


def get_validation_report(validated: pl.LazyFrame | pl.DataFrame) -> dict[str, Any]:
    df = validated.collect() if isinstance(validated, pl.LazyFrame) else validated
    total = df.height
    valid = df.filter(pl.col(VALIDATION_ERRORS).list.len() == 0).height
    return {
        "total_records": total,
        "valid_records": valid,
        "invalid_records": total - valid,
        "validity_rate": valid / total if total else 0.0,
        "errors_by_rule": get_validation_summary(df).to_dicts(),
    }


def get_ledger_report(ledger: ErrorLedger) -> pl.DataFrame:
    """Rejected rows per (source, reason) across the whole run."""
    return (
        ledger.to_frame()
        .with_columns(pl.col("reason").str.split(";"))
        .explode("reason")
        .group_by("source", "reason")
        .agg(pl.len().alias("count"))
        .sort("source", "reason")
    )
