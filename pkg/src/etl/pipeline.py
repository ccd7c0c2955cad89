"""Orchestration of bronze → silver → gold and of every analysis step."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import polars as pl

from das.logger import log_info, log_warn
from src.bayes import (
    Diagnostics,
    PosteriorDraws,
    PPCResult,
    compare_domain_intercepts,
    diagnostics,
    model_spec,
    posterior_predictive,
    sample_posterior,
    settings_from_config,
    summarize,
)
from src.bronze import load_bronze_markets, load_bronze_trades, read_bronze_file
from src.bronze.loader import TRADE_COLUMNS, Source
from src.calib import (
    CellFits,
    domain_weighting_gap,
    fit_cells,
    horizon_grid,
    leave_one_out,
    size_table_with_delta,
    slope_grid,
    slope_table,
    subgroup_slopes,
)
from src.calib.analyses import GroupFits, WeightingGap
from src.common.grid import CellData, CellKey, SlopeGrid
from src.common.models import Market, Trade, TradeRecord, trade_records
from src.config import FilterConfig, FitConfig, PipelineConfig
from src.constants import CANONICAL_ORDER, DecompositionType, FileFormat, ScaleVariant
from src.decomp import (
    ComponentSet,
    FTable,
    ScaleEffect,
    SizeHorizonCheck,
    VarianceTable,
    f_tests,
    fit_sequential,
    fit_wls,
    horizon_curve,
    platform_delta,
    scale_effect,
    size_horizon_check,
    variance_decomposition,
)
from src.errors import ConfigError, DataError, IncompleteGridError
from src.gold import assemble_observations, cells_from_observations, dataset_stats
from src.gold.grid import groups_from_frame, with_labels
from src.silver.classification import DomainRuleSet, load_rules
from src.silver.ledger import ErrorLedger
from src.silver.models import get_market as get_market_model
from src.silver.models import get_trade as get_trade_model
from src.silver.sources import get_market as get_market_source
from src.silver.sources import get_trade as get_trade_source


@dataclass(frozen=True)
class LoadedInputs:
    trades: list[Trade]
    markets: Market
    rules: DomainRuleSet
    ledger: ErrorLedger

    @property
    def analysis_domains(self) -> list[str]:
        """Rule domains in file order; the fallback label is not analysed."""
        named = [d for d in self.rules.domains if d != self.rules.fallback_domain]
        return named or [self.rules.fallback_domain]


def run_bronze(cfg: PipelineConfig) -> tuple[list[pl.DataFrame], pl.DataFrame]:
    """Raw trade shards and the market file as string-typed frames."""
    if not cfg.inputs.trades or cfg.inputs.markets is None:
        raise ConfigError("inputs.trades and inputs.markets are required for this command")
    trades = load_bronze_trades(list(cfg.inputs.trades), cfg.inputs.trades_format)
    markets = load_bronze_markets(cfg.inputs.markets)
    log_info(
        f"Bronze: {sum(t.height for t in trades)} trade rows in {len(trades)} shards, "
        f"{markets.height} market rows"
    )
    return trades, markets


def run_silver(
    bronze_trades: list[pl.DataFrame], bronze_markets: pl.DataFrame, ledger: ErrorLedger
) -> tuple[list[Trade], Market]:
    """Typed, validated models; rejected rows go to the ledger."""
    trades = [get_trade_model(get_trade_source(df)) for df in bronze_trades]
    for i, shard in enumerate(trades):
        ledger.record_invalid_rows(f"trades[{i}]", shard)
    markets = get_market_model(get_market_source(bronze_markets))
    ledger.record_invalid_rows("markets", markets)
    return trades, markets


def parse_trades(
    source: Source,
    file_format: FileFormat = FileFormat.CSV,
    ledger: ErrorLedger | None = None,
    name: str = "trades",
) -> list[TradeRecord]:
    """Valid trades of one file in file order; rejected rows go to the ledger."""
    bronze = read_bronze_file(source, TRADE_COLUMNS, file_format, name=name)
    model = get_trade_model(get_trade_source(bronze))
    (ledger if ledger is not None else ErrorLedger()).record_invalid_rows(name, model)
    return trade_records(model)


def load_inputs(cfg: PipelineConfig) -> LoadedInputs:
    ledger = ErrorLedger()
    rules = load_rules(cfg.inputs.rules)
    trades, markets = run_silver(*run_bronze(cfg), ledger)
    return LoadedInputs(trades, markets, rules, ledger)


def run_ingest_stats(inputs: LoadedInputs) -> pl.DataFrame:
    trades = pl.concat(inputs.trades) if inputs.trades else Trade.empty()
    return dataset_stats(trades, inputs.markets, inputs.rules)


def build_observations(
    inputs: LoadedInputs, cfg: PipelineConfig, filters: FilterConfig | None = None
) -> pl.DataFrame:
    observations = assemble_observations(
        inputs.trades,
        inputs.markets,
        inputs.rules,
        cfg.binning,
        filters or cfg.filters,
        inputs.ledger,
    )
    return observations.filter(pl.col("domain").is_in(inputs.analysis_domains))


def build_cells(
    inputs: LoadedInputs, cfg: PipelineConfig, filters: FilterConfig | None = None
) -> dict[CellKey, CellData]:
    return cells_from_observations(build_observations(inputs, cfg, filters))


def grid_of(fits: CellFits, domains: Sequence[str], cfg: PipelineConfig) -> SlopeGrid:
    return slope_grid(
        fits, list(domains), cfg.binning.n_horizon_bins, cfg.binning.n_size_bins
    )


@dataclass(frozen=True)
class CellFitResult:
    cells: dict[CellKey, CellData]
    fits: CellFits
    grid: SlopeGrid
    horizon_table: pl.DataFrame
    size_table: pl.DataFrame
    weighting_gaps: dict[str, WeightingGap]
    size_horizon: SizeHorizonCheck | None


def run_fit_cells(inputs: LoadedInputs, cfg: PipelineConfig) -> CellFitResult:
    """Per-cell fits plus the horizon and size slope tables and the weighting gap."""
    cells = build_cells(inputs, cfg)
    if not cells:
        raise DataError("No cell reaches min_trades_per_cell after filtering")
    fits = fit_cells(cells, cfg.fit, cfg.threads)
    domains = inputs.analysis_domains
    grid = grid_of(fits, domains, cfg)
    n_horizon = cfg.binning.n_horizon_bins
    size_long = slope_table(cells, cfg.fit, "size", domains)
    gaps = {
        d: domain_weighting_gap(cells, d, cfg.fit, n_horizon)
        for d in domains
        if any(k.domain == d for k in cells)
    }
    confound = None
    if grid.missing_cells():
        log_warn(f"{len(grid.missing_cells())} grid cells missing; size x horizon check skipped")
    else:
        confound = size_horizon_check(grid, cells)
    return CellFitResult(
        cells=cells,
        fits=fits,
        grid=grid,
        horizon_table=slope_table(cells, cfg.fit, "horizon", domains),
        size_table=size_table_with_delta(size_long, cfg.binning.n_size_bins),
        weighting_gaps=gaps,
        size_horizon=confound,
    )


def run_subgroups(
    inputs: LoadedInputs, cfg: PipelineConfig
) -> tuple[GroupFits, GroupFits] | None:
    """Pooled and leave-one-out slopes of the subgroup labels, when a subgroup rule file is set."""
    if cfg.inputs.subgroup_rules is None:
        return None
    labels = load_rules(cfg.inputs.subgroup_rules)
    observations = build_observations(inputs, cfg)
    labelled = with_labels(observations, inputs.markets, labels)
    named = [d for d in labels.domains if d != labels.fallback_domain]
    groups = groups_from_frame(labelled.filter(pl.col("label").is_in(named)), "label")
    return subgroup_slopes(groups, cfg.fit), leave_one_out(groups, cfg.fit)


@dataclass(frozen=True)
class DecompositionResult:
    components: ComponentSet
    variance: list[VarianceTable]
    ftable: FTable
    wls_components: ComponentSet
    wls_variance: VarianceTable
    horizon_curve: dict[int, tuple[float, int]]


def run_decompose(grid: SlopeGrid) -> DecompositionResult:
    grid.require_complete()
    components = fit_sequential(grid)
    tables = [
        variance_decomposition(grid, CANONICAL_ORDER, kind)
        for kind in (DecompositionType.I, DecompositionType.II, DecompositionType.III)
    ]
    wls_components, wls_table = fit_wls(grid)
    log_info(
        f"Total R2 {tables[0].total_r2:.4f} (unweighted), {wls_table.total_r2:.4f} (weighted)"
    )
    return DecompositionResult(
        components=components,
        variance=tables,
        ftable=f_tests(grid, components),
        wls_components=wls_components,
        wls_variance=wls_table,
        horizon_curve=horizon_curve(grid),
    )


def run_scale_effect(
    grid: SlopeGrid,
    domains: Sequence[str],
    cells: dict[CellKey, CellData] | None = None,
    fit_cfg: FitConfig | None = None,
) -> list[ScaleEffect]:
    """Within-horizon Δ for every domain, plus the aggregate Δ when observations are given."""
    effects = [scale_effect(grid, d, ScaleVariant.WITHIN_HORIZON) for d in domains]
    if cells is not None and fit_cfg is not None:
        effects += [
            scale_effect(grid, d, ScaleVariant.AGGREGATE, cells=cells, fit_cfg=fit_cfg)
            for d in domains
        ]
    return effects


ROBUSTNESS_SCHEMA = {
    "variant": pl.String,
    "price_min": pl.Int64,
    "price_max": pl.Int64,
    "regularization_C": pl.Float64,
    "min_trades_per_market": pl.Int64,
    "missing_cells": pl.Int64,
    "mu_r2": pl.Float64,
    "alpha_r2": pl.Float64,
    "beta_r2": pl.Float64,
    "gamma_r2": pl.Float64,
    "total_r2": pl.Float64,
}


def _robustness_row(
    inputs: LoadedInputs,
    cfg: PipelineConfig,
    variant: str,
    filters: FilterConfig,
    fit_cfg: FitConfig,
) -> dict:
    cells = build_cells(inputs, cfg, filters)
    grid = grid_of(fit_cells(cells, fit_cfg, cfg.threads), inputs.analysis_domains, cfg)
    row = {
        "variant": variant,
        "price_min": filters.price_min,
        "price_max": filters.price_max,
        "regularization_C": fit_cfg.regularization_C,
        "min_trades_per_market": filters.min_trades_per_market,
        "missing_cells": len(grid.missing_cells()),
    }
    try:
        table = variance_decomposition(grid.require_complete())
    except IncompleteGridError as exc:
        log_warn(f"robustness {variant} {filters.price_min}-{filters.price_max}: {exc}")
        return row | {k: None for k in ("mu_r2", "alpha_r2", "beta_r2", "gamma_r2", "total_r2")}
    return row | {
        f"{r.component.value}_r2": r.marginal_r2 for r in table.rows
    } | {"total_r2": table.total_r2}


def run_robustness(inputs: LoadedInputs, cfg: PipelineConfig) -> pl.DataFrame:
    """Type I decomposition across price ranges × regularization, plus the volume variant."""
    rows = []
    for price_min, price_max in cfg.robustness.price_ranges:
        filters = cfg.filters.model_copy(update={"price_min": price_min, "price_max": price_max})
        for c in cfg.robustness.regularization:
            fit_cfg = cfg.fit.model_copy(update={"regularization_C": c})
            rows.append(_robustness_row(inputs, cfg, "price_range", filters, fit_cfg))
    if cfg.robustness.volume_min_trades_per_market is not None:
        filters = cfg.filters.model_copy(
            update={"min_trades_per_market": cfg.robustness.volume_min_trades_per_market}
        )
        rows.append(_robustness_row(inputs, cfg, "market_volume", filters, cfg.fit))
    return pl.DataFrame(rows, schema=ROBUSTNESS_SCHEMA)


def total_r2_range(robustness: pl.DataFrame) -> tuple[float, float]:
    values = robustness["total_r2"].drop_nulls().to_numpy()
    if values.size == 0:
        return (float("nan"), float("nan"))
    return float(np.min(values)), float(np.max(values))


@dataclass(frozen=True)
class PlatformResult:
    cells: pl.DataFrame
    horizon: pl.DataFrame
    domain_means: pl.DataFrame
    scale_effects: pl.DataFrame
    size_slopes: pl.DataFrame


def run_compare_platforms(
    cfg_a: PipelineConfig, cfg_b: PipelineConfig
) -> PlatformResult:
    """
    Fit both platforms with their own configs; Δ per shared cell, per shared
    (domain, horizon) pooled over size, and per domain; scale effects and size
    slopes side by side.
    """
    inputs_a, inputs_b = load_inputs(cfg_a), load_inputs(cfg_b)
    fitted_a = run_fit_cells(inputs_a, cfg_a)
    fitted_b = run_fit_cells(inputs_b, cfg_b)
    comparison = platform_delta(fitted_a.grid, fitted_b.grid, cfg_a.reliable_bins)
    shared = [d for d in fitted_a.grid.domains if d in fitted_b.grid.domains]
    pooled = platform_delta(
        horizon_grid(
            fitted_a.cells, cfg_a.fit, fitted_a.grid.domains, cfg_a.binning.n_horizon_bins
        ),
        horizon_grid(
            fitted_b.cells, cfg_b.fit, fitted_b.grid.domains, cfg_b.binning.n_horizon_bins
        ),
        cfg_a.reliable_bins,
    )

    scale_rows = []
    for label, fitted, cfg in (("a", fitted_a, cfg_a), ("b", fitted_b, cfg_b)):
        for domain in shared:
            for variant in ScaleVariant:
                try:
                    effect = scale_effect(
                        fitted.grid, domain, variant, cells=fitted.cells, fit_cfg=cfg.fit
                    )
                except DataError as exc:
                    log_warn(f"platform {label} {domain} {variant}: skipped ({exc})")
                    continue
                scale_rows.append(
                    {
                        "platform": label,
                        "domain": domain,
                        "variant": variant.value,
                        "delta": effect.delta,
                    }
                )
    scale_df = pl.DataFrame(
        scale_rows,
        schema={
            "platform": pl.String,
            "domain": pl.String,
            "variant": pl.String,
            "delta": pl.Float64,
        },
    )
    size_df = pl.concat(
        [
            fitted_a.size_table.filter(pl.col("domain").is_in(shared)).with_columns(
                pl.lit("a").alias("platform")
            ),
            fitted_b.size_table.filter(pl.col("domain").is_in(shared)).with_columns(
                pl.lit("b").alias("platform")
            ),
        ],
        how="diagonal_relaxed",
    )
    return PlatformResult(
        comparison.cells,
        pooled.cells.drop("size_bin"),
        comparison.domain_means,
        scale_df,
        size_df,
    )


@dataclass(frozen=True)
class BayesResult:
    draws: PosteriorDraws
    diagnostics: Diagnostics
    summary: pl.DataFrame
    alpha_comparison: pl.DataFrame


def run_bayes(grid: SlopeGrid, cfg: PipelineConfig) -> BayesResult:
    """Posterior draws of the hierarchical model, with convergence checks and summaries."""
    grid.require_complete()
    draws = sample_posterior(
        grid, model_spec(cfg), settings_from_config(cfg), threads=cfg.threads
    )
    summary = summarize(draws)
    return BayesResult(
        draws=draws,
        diagnostics=diagnostics(draws),
        summary=summary,
        alpha_comparison=compare_domain_intercepts(summary, fit_sequential(grid)),
    )


def run_ppc(draws: PosteriorDraws, grid: SlopeGrid, cfg: PipelineConfig) -> PPCResult:
    return posterior_predictive(draws, grid, model_spec(cfg), seed=cfg.seed)
