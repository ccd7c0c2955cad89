"""Measure, decompose and correct prediction-market miscalibration from trade files."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import polars as pl
from pandera.errors import SchemaError

from das.logger import configure_logging, log_error, log_info
from src.calib import recalibrate, recalibrate_cell, recalibrate_frame
from src.config import PENALTY_CONVENTION, PipelineConfig, load_config
from src.errors import CalibrationEngineError, ConfigError, DataError
from src.etl import (
    load_inputs,
    run_bayes,
    run_compare_platforms,
    run_decompose,
    run_fit_cells,
    run_ingest_stats,
    run_ppc,
    run_robustness,
    run_scale_effect,
    run_subgroups,
)
from src.etl.pipeline import build_cells, total_r2_range
from src.reporting import (
    ArtifactWriter,
    get_ledger_report,
    print_diagnostics,
    print_fit_summary,
    print_frame,
    print_ftable,
    print_ingest_summary,
    print_ppc,
    print_variance_table,
)
from src.reporting.tables import (
    augmented_frame,
    cells_frame,
    components_frame,
    failures_frame,
    group_fits_frame,
    horizon_curve_frame,
    read_cells,
    read_draws,
    scale_effect_frame,
    weighting_gap_frame,
)
from src.resample import bootstrap_scale_effect, intervals_frame
from src.synth import SynthSpec, generate

CELLS_CSV = "cells.csv"
DRAWS_CSV = "draws.csv"

Handler = Callable[[PipelineConfig, argparse.Namespace, ArtifactWriter], dict[str, Any] | None]


def _cells_path(cfg: PipelineConfig, args: argparse.Namespace) -> Path:
    return args.cells or cfg.output_dir / CELLS_CSV


def _grid(cfg: PipelineConfig, args: argparse.Namespace):
    return read_cells(
        _cells_path(cfg, args), cfg.binning.n_horizon_bins, cfg.binning.n_size_bins
    )


def cmd_ingest_stats(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    inputs = load_inputs(cfg)
    stats = run_ingest_stats(inputs)
    writer.csv("dataset_stats.csv", stats)
    writer.csv("ledger.csv", inputs.ledger.to_frame())
    writer.csv("ledger_summary.csv", get_ledger_report(inputs.ledger))
    print_ingest_summary(inputs.trades, inputs.markets, inputs.ledger)
    print_frame("Dataset statistics", stats)
    return {"ledger_rows": len(inputs.ledger)}


def cmd_fit_cells(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    inputs = load_inputs(cfg)
    result = run_fit_cells(inputs, cfg)
    writer.csv(CELLS_CSV, cells_frame(result.fits, result.grid.domains))
    writer.csv("fit_failures.csv", failures_frame(result.fits))
    writer.csv("horizon_slopes.csv", result.horizon_table)
    writer.csv("size_slopes.csv", result.size_table)
    writer.csv("weighting_gap.csv", weighting_gap_frame(result.weighting_gaps))
    writer.csv("ledger.csv", inputs.ledger.to_frame())
    if result.size_horizon is not None:
        check = result.size_horizon
        writer.json(
            "size_horizon.json",
            {
                "added_r2": check.added_r2,
                "gamma_r2": check.gamma_r2,
                "gamma_r2_with_interaction": check.gamma_r2_with_interaction,
                "total_r2": check.total_r2,
                "total_r2_with_interaction": check.total_r2_with_interaction,
            },
        )
        writer.csv("median_horizon_by_size.csv", check.median_horizon_by_size)
    subgroups = run_subgroups(inputs, cfg)
    if subgroups is not None:
        pooled, loo = subgroups
        writer.csv("subgroup_slopes.csv", group_fits_frame(pooled))
        writer.csv("leave_one_out.csv", group_fits_frame(loo, "left_out"))

    print_fit_summary(len(result.fits.fits), len(result.fits.failures), result.grid.shape)
    print_frame("Slopes by horizon", result.horizon_table)
    print_frame("Slopes by size", result.size_table)
    return {"cells": len(result.fits.fits), "failed": len(result.fits.failures)}


def cmd_decompose(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    grid = _grid(cfg, args)
    result = run_decompose(grid)
    writer.csv("components.csv", components_frame(result.components))
    writer.csv("augmented.csv", augmented_frame(grid, result.components))
    writer.csv("horizon_curve.csv", horizon_curve_frame(result.horizon_curve))
    writer.csv(
        "variance.csv",
        pl.concat([t.to_frame() for t in (*result.variance, result.wls_variance)]),
    )
    writer.csv("ftests.csv", result.ftable.to_frame())
    writer.csv("wls_components.csv", components_frame(result.wls_components))
    for table in (*result.variance, result.wls_variance):
        print_variance_table(table)
    print_ftable(result.ftable)
    return {"total_r2": result.variance[0].total_r2}


def cmd_scale_effect(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    grid = _grid(cfg, args)
    domains = args.domain or list(grid.domains)
    cells = fit_cfg = None
    if args.aggregate:
        cells = build_cells(load_inputs(cfg), cfg)
        fit_cfg = cfg.fit
    effects = run_scale_effect(grid, domains, cells, fit_cfg)
    table = scale_effect_frame(effects)
    writer.csv("scale_effect.csv", table)
    print_frame("Scale effect (largest minus smallest size bin)", table.drop("horizon_diffs"))
    return None


def cmd_bootstrap(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    cells = build_cells(load_inputs(cfg), cfg)
    domains = args.domain or cfg.bootstrap.domains
    estimates = [
        bootstrap_scale_effect(
            cells,
            domain,
            cfg.bootstrap,
            cfg.fit,
            n_horizon=cfg.binning.n_horizon_bins,
            size_hi=cfg.binning.n_size_bins - 1,
            threads=cfg.threads,
        )
        for domain in domains
    ]
    table = intervals_frame(estimates)
    writer.csv("bootstrap.csv", table)
    print_frame(f"Bootstrap intervals ({cfg.bootstrap.method.value})", table)
    return {"bootstrap_seed": cfg.bootstrap.seed}


def cmd_bayes(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    grid = _grid(cfg, args)
    result = run_bayes(grid, cfg)
    writer.csv(DRAWS_CSV, result.draws.to_frame())
    writer.csv("sampler_stats.csv", result.draws.stats_frame())
    writer.csv("diagnostics.csv", result.diagnostics.to_frame())
    writer.json(
        "diagnostics_summary.json",
        {
            "max_rhat": result.diagnostics.max_rhat,
            "min_ess": result.diagnostics.min_ess,
            "divergences": result.diagnostics.divergence_count,
            "divergence_warning": result.diagnostics.divergence_warning,
            "bfmi": [float(v) for v in result.diagnostics.bfmi],
            "undefined_rhat": result.diagnostics.undefined,
        },
    )
    writer.csv("posterior.csv", result.summary)
    writer.csv("alpha_comparison.csv", result.alpha_comparison)
    print_diagnostics(result.diagnostics)
    print_frame("Domain intercepts, posterior vs least squares", result.alpha_comparison)
    return None


def cmd_ppc(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    grid = _grid(cfg, args).require_complete()
    draws = read_draws(args.draws or cfg.output_dir / DRAWS_CSV)
    result = run_ppc(draws, grid, cfg)
    writer.csv("ppc.csv", result.cells)
    writer.csv("ppc_domains.csv", result.domain_coverage)
    print_ppc(result)
    outside = result.outside()
    if outside.height:
        print_frame("Cells outside their predictive interval", outside)
    return {"coverage": result.overall_coverage}


def cmd_recalibrate(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    if args.batch is not None:
        if not args.batch.is_file():
            raise ConfigError(f"Batch file does not exist: {args.batch}")
        requests = pl.read_csv(args.batch)
        missing = {"price", "domain", "horizon_bin", "size_bin"} - set(requests.columns)
        if missing:
            raise DataError(f"Batch file lacks columns {sorted(missing)}")
        table = recalibrate_frame(requests, _grid(cfg, args))
        writer.csv("recalibrated.csv", table)
        print_frame("Recalibrated prices", table)
        return None
    if args.price is None:
        raise ConfigError("recalibrate needs --price (with --slope or a cell) or --batch")
    if args.slope is not None:
        value = recalibrate(args.price, args.slope)
    else:
        if args.domain is None or args.horizon is None or args.size is None:
            raise ConfigError("Cell lookup needs --domain, --horizon and --size")
        value = recalibrate_cell(args.price, _grid(cfg, args), args.domain, args.horizon, args.size)
        log_info(f"slope from cell ({args.domain}, {args.horizon}, {args.size})")
    print(f"{value:.4f}")
    return None


def cmd_synth(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    overrides = {"seed": args.seed} if args.seed is not None else None
    spec = load_config(SynthSpec, args.spec, overrides)
    dataset = generate(spec, cfg.threads)
    for name, frame in dataset.frames().items():
        writer.csv(name, frame)
    writer.csv("synth_components.csv", components_frame(dataset.components))
    print(
        f"Generated {sum(c.n for c in dataset.cells.values())} trades in "
        f"{len(dataset.cells)} cells ({dataset.clamped_fraction:.1%} prices clamped)"
    )
    return {"synth_spec": spec.model_dump(mode="json")}


def cmd_compare_platforms(
    cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter
):
    cfg_b = load_config(PipelineConfig, args.config_b, _overrides(args))
    result = run_compare_platforms(cfg, cfg_b)
    writer.csv("compare.csv", result.cells)
    writer.csv("compare_horizon.csv", result.horizon)
    writer.csv("compare_domains.csv", result.domain_means)
    writer.csv("compare_scale.csv", result.scale_effects)
    writer.csv("compare_size.csv", result.size_slopes)
    print_frame("Platform B minus platform A (reliable bins)", result.domain_means)
    return {"config_b_hash": cfg_b.config_hash()}


def cmd_robustness(cfg: PipelineConfig, args: argparse.Namespace, writer: ArtifactWriter):
    table = run_robustness(load_inputs(cfg), cfg)
    writer.csv("robustness.csv", table)
    low, high = total_r2_range(table)
    print_frame("Variance decomposition under alternative specifications", table)
    print(f"Total R2 range: [{low:.3f}, {high:.3f}]")
    return None


COMMANDS: dict[str, tuple[Handler, str]] = {
    "ingest-stats": (cmd_ingest_stats, "Validate inputs; per-domain dataset statistics"),
    "fit-cells": (cmd_fit_cells, "Fit the recalibration slope of every grid cell"),
    "decompose": (cmd_decompose, "Additive decomposition, variance tables and F tests"),
    "scale-effect": (cmd_scale_effect, "Slope gap between the largest and smallest size bins"),
    "bootstrap": (cmd_bootstrap, "Bootstrap intervals of the scale effect"),
    "bayes": (cmd_bayes, "Sample the hierarchical model of the slope grid"),
    "ppc": (cmd_ppc, "Posterior predictive check of the slope grid"),
    "recalibrate": (cmd_recalibrate, "Map raw prices to calibrated probabilities"),
    "synth": (cmd_synth, "Generate synthetic trades with known slopes"),
    "compare-platforms": (cmd_compare_platforms, "Slope differences between two platforms"),
    "robustness": (cmd_robustness, "Decomposition across price ranges and regularization"),
}

# commands that fit cells and so apply the slope penalty
FITTING = {"fit-cells", "scale-effect", "bootstrap", "compare-platforms", "robustness"}
PENALTY_EPILOG = f"[fit] regularization_C: {PENALTY_CONVENTION}."


def _add_command_arguments(name: str, sub: argparse.ArgumentParser) -> None:
    if name in {"decompose", "scale-effect", "bayes", "ppc", "recalibrate"}:
        sub.add_argument(
            "--cells", type=Path, help=f"Cells table. Default: <output-dir>/{CELLS_CSV}"
        )
    if name in {"scale-effect", "bootstrap"}:
        sub.add_argument("--domain", action="append", help="Domain to analyse (repeatable)")
    if name == "scale-effect":
        sub.add_argument(
            "--aggregate",
            action="store_true",
            help="Also refit size bins pooled over horizons (needs the configured inputs)",
        )
    if name == "ppc":
        sub.add_argument("--draws", type=Path, help=f"Default: <output-dir>/{DRAWS_CSV}")
    if name == "recalibrate":
        sub.add_argument("--price", type=float, help="Raw price in (0, 1)")
        sub.add_argument("--slope", type=float, help="Slope to apply directly")
        sub.add_argument("--domain", help="Cell domain for a lookup in the cells table")
        sub.add_argument("--horizon", type=int, help="Cell horizon bin")
        sub.add_argument("--size", type=int, help="Cell size bin")
        sub.add_argument(
            "--batch", type=Path, help="CSV of price, domain, horizon_bin, size_bin rows"
        )
    if name == "synth":
        sub.add_argument("--spec", type=Path, required=True, help="Synthetic dataset TOML")
    if name == "compare-platforms":
        sub.add_argument(
            "--config-b", type=Path, required=True, help="Config of the second platform"
        )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Pipeline TOML config")
    common.add_argument("--output-dir", type=Path, help="Artifact directory (overrides config)")
    common.add_argument("--seed", type=int, help="Master seed (overrides config)")
    common.add_argument("--threads", type=int, help="Worker cap; results do not depend on it")
    common.add_argument(
        "--log-level", help="DEBUG, INFO, WARN or ERROR. Default: LOG_LEVEL or INFO"
    )

    parser = argparse.ArgumentParser(description=__doc__, epilog=PENALTY_EPILOG)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(
            name,
            parents=[common],
            help=help_text,
            epilog=PENALTY_EPILOG if name in FITTING else None,
        )
        _add_command_arguments(name, sub)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "output_dir": str(args.output_dir) if args.output_dir is not None else None,
        "seed": args.seed,
        "threads": args.threads,
    }


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    handler, _ = COMMANDS[args.command]
    writer: ArtifactWriter | None = None
    try:
        cfg = load_config(PipelineConfig, args.config, _overrides(args))
        writer = ArtifactWriter(cfg.output_dir, args.command)
        extra = handler(cfg, args, writer)
        manifest = writer.manifest(cfg, cfg.seed, extra)
    except SchemaError as exc:
        return _fail(DataError(f"Typed frame failed schema validation: {exc}"), writer)
    except pl.exceptions.ComputeError as exc:
        return _fail(DataError(f"Input could not be read: {exc}"), writer)
    except CalibrationEngineError as exc:
        return _fail(exc, writer)
    log_info(f"{len(writer.written)} artifacts and {manifest.name} in {cfg.output_dir}")
    return 0


def _fail(exc: CalibrationEngineError, writer: ArtifactWriter | None) -> int:
    if writer is not None:
        writer.discard()
    log_error(f"{type(exc).__name__}: {exc}")
    print(f"error: {exc}", file=sys.stderr)
    return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
