"""Pipeline orchestration: input loading and one run_* step per command."""

from .pipeline import (
    LoadedInputs,
    build_cells,
    build_observations,
    load_inputs,
    parse_trades,
    run_bayes,
    run_bronze,
    run_compare_platforms,
    run_decompose,
    run_fit_cells,
    run_ingest_stats,
    run_ppc,
    run_robustness,
    run_scale_effect,
    run_silver,
    run_subgroups,
)

__all__ = [
    "LoadedInputs",
    "build_cells",
    "build_observations",
    "load_inputs",
    "parse_trades",
    "run_bayes",
    "run_bronze",
    "run_compare_platforms",
    "run_decompose",
    "run_fit_cells",
    "run_ingest_stats",
    "run_ppc",
    "run_robustness",
    "run_scale_effect",
    "run_silver",
    "run_subgroups",
]
