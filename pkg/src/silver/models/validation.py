"""Validation rules shared by the silver models.

A rule produces a boolean expression that is true for valid rows; failing rule
names are collected per row into the `validation_errors` list column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import polars as pl

VALIDATION_ERRORS = "validation_errors"


@dataclass
class ValidationRule:
    """A validation rule with name and check expression."""

    name: str
    check: Callable[[], pl.Expr]
    description: str


def is_not_null(column: str) -> pl.Expr:
    return pl.col(column).is_not_null()


def parsed_when_present(column: str, raw_column: str) -> pl.Expr:
    """Raw text either absent or parsed into the typed column."""
    return pl.col(raw_column).is_null() | pl.col(column).is_not_null()


def with_validation_errors(
    model_lf: pl.LazyFrame, rules: list[ValidationRule]
) -> pl.LazyFrame:
    error_exprs: list[pl.Expr] = []
    for rule in rules:
        error_exprs.append(
            pl.when(~rule.check().fill_null(False))
            .then(pl.lit(rule.name))
            .otherwise(pl.lit(None, dtype=pl.String))
        )
    return model_lf.with_columns(
        pl.concat_list(error_exprs)
        .list.eval(pl.element().drop_nulls())
        .alias(VALIDATION_ERRORS)
    )
