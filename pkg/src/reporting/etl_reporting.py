"""Console summaries printed by the commands (stdout; logs go to stderr)."""

from __future__ import annotations

from typing import Any

import polars as pl

from src.bayes.diagnostics import Diagnostics
from src.bayes.ppc import PPCResult
from src.decomp.anova import VarianceTable
from src.decomp.ftests import FTable
from src.reporting.models_summaries import get_market_summary, get_trade_summary
from src.reporting.validation_reports import get_validation_report
from src.silver.ledger import ErrorLedger


def _print_validation(title: str, report: dict[str, Any]) -> None:
    print()
    print(f"{title} validation results:")
    print(f"  Valid: {report['valid_records']}")
    print(f"  Invalid: {report['invalid_records']}")
    print(f"  Validity rate: {report['validity_rate']:.1%}")
    if report["errors_by_rule"]:
        print("  Errors by rule:")
        for err in report["errors_by_rule"]:
            print(f"    {err['error']}: {err['count']}")


def print_ingest_summary(
    trades: list[pl.DataFrame], markets: pl.DataFrame, ledger: ErrorLedger
) -> None:
    """Row counts and validation results of the silver trade and market models."""
    print("Silver layer (in-memory):")
    for i, shard in enumerate(trades):
        summary = get_trade_summary(shard)
        print(f"  trades[{i}]: {summary['total_trades']} ({summary['valid']} valid)")
        _print_validation(f"trades[{i}]", get_validation_report(shard))
    summary = get_market_summary(markets)
    print()
    print(
        f"  markets: {summary['total_markets']} "
        f"(yes {summary['resolved_yes']}, no {summary['resolved_no']}, "
        f"unresolved {summary['unresolved']})"
    )
    _print_validation("markets", get_validation_report(markets))
    print()
    print(f"Error ledger: {len(ledger)} rejected rows")


def print_frame(title: str, df: pl.DataFrame, max_rows: int = 60) -> None:
    print()
    print(f"{title}:")
    with pl.Config(tbl_rows=max_rows, tbl_cols=-1, float_precision=4, tbl_hide_dataframe_shape=True):
        print(df)


def print_fit_summary(fitted: int, failed: int, shape: tuple[int, int, int]) -> None:
    total = shape[0] * shape[1] * shape[2]
    print()
    print(f"Fitted {fitted} of {total} grid cells ({failed} failed)")


def print_variance_table(table: VarianceTable) -> None:
    weight = "weighted" if table.weighted else "unweighted"
    print()
    print(f"Variance decomposition (Type {table.decomposition_type.value}, {weight}):")
    for row in table.rows:
        print(
            f"  {row.component.value:<13} SS={row.ss:9.4f} df={row.df:3d} "
            f"R2={row.marginal_r2:.3f} cumulative={row.cumulative_r2:.3f}"
        )
    print(f"  {'residual':<13} SS={table.ss_residual:9.4f} df={table.df_residual:3d}")
    print(f"  total R2 = {table.total_r2:.4f}")


def print_ftable(table: FTable) -> None:
    print()
    print("F tests (each component given all others):")
    for row in table.rows:
        print(
            f"  {row.component:<13} F={row.f:9.3f} "
            f"df=({row.df},{table.df_residual}) p={row.p_value_text} "
            f"partial eta2={row.partial_eta2:.3f}"
        )


def print_diagnostics(diag: Diagnostics) -> None:
    print()
    print("Sampler diagnostics:")
    print(f"  {diag.summary_line()}")
    if diag.divergence_warning:
        print("  WARNING: divergent transitions above 5% of kept iterations")
    if diag.undefined:
        print(f"  R-hat undefined (constant draws): {', '.join(diag.undefined)}")


def print_ppc(result: PPCResult) -> None:
    print()
    print(f"Posterior predictive coverage: {result.overall_coverage:.1%}")
    for row in result.domain_coverage.iter_rows(named=True):
        print(f"  {row['domain']}: {row['within']}/{row['cells']} ({row['coverage']:.1%})")
