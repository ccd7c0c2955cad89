"""Additive decomposition of the slope grid and its inference."""

from src.decomp.anova import (
    ComponentVariance,
    VarianceTable,
    fit_least_squares,
    fit_wls,
    variance_decomposition,
)
from src.decomp.components import ComponentSet
from src.decomp.confound import SizeHorizonCheck, size_horizon_check
from src.decomp.fdist import f_sf, regularized_beta
from src.decomp.ftests import FTable, f_table, f_tests, format_p_value
from src.decomp.platform import PlatformComparison, platform_delta
from src.decomp.scale import ScaleEffect, scale_effect, within_horizon_delta
from src.decomp.sequential import fit_sequential, horizon_curve, project

__all__ = [
    "ComponentSet",
    "ComponentVariance",
    "FTable",
    "PlatformComparison",
    "ScaleEffect",
    "SizeHorizonCheck",
    "VarianceTable",
    "f_sf",
    "f_table",
    "f_tests",
    "fit_least_squares",
    "fit_sequential",
    "fit_wls",
    "format_p_value",
    "horizon_curve",
    "platform_delta",
    "project",
    "regularized_beta",
    "scale_effect",
    "size_horizon_check",
    "variance_decomposition",
    "within_horizon_delta",
]
