"""Logistic recalibration fits and the price recalibration transform."""

from src.calib.analyses import (
    GroupFits,
    WeightingGap,
    domain_weighting_gap,
    horizon_fits,
    horizon_grid,
    leave_one_out,
    pooled_slope,
    size_fits,
    size_table_with_delta,
    slope_table,
    subgroup_slopes,
    weighting_gap,
)
from src.calib.fitter import (
    CalibrationFit,
    CellFits,
    fit_arrays,
    fit_cells,
    fit_recalibration,
    slope_grid,
)
from src.calib.transform import recalibrate, recalibrate_cell, recalibrate_frame

__all__ = [
    "CalibrationFit",
    "CellFits",
    "GroupFits",
    "WeightingGap",
    "domain_weighting_gap",
    "fit_arrays",
    "fit_cells",
    "fit_recalibration",
    "horizon_fits",
    "horizon_grid",
    "leave_one_out",
    "pooled_slope",
    "recalibrate",
    "recalibrate_cell",
    "recalibrate_frame",
    "size_fits",
    "size_table_with_delta",
    "slope_grid",
    "slope_table",
    "subgroup_slopes",
    "weighting_gap",
]
