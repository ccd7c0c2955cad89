"""F tests and partial η² of the decomposition components."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import polars as pl

from src.common.grid import SlopeGrid
from src.constants import CANONICAL_ORDER, Component
from src.decomp.components import ComponentSet
from src.decomp.design import build_design
from src.decomp.fdist import f_sf
from src.errors import StructuralError

P_VALUE_FLOOR = 1e-300


@dataclass(frozen=True, slots=True)
class FTestRow:
    component: str
    ss: float
    df: int
    ms: float
    f: float
    p_value: float
    partial_eta2: float

    @property
    def p_value_text(self) -> str:
        return format_p_value(self.p_value)


@dataclass(frozen=True)
class FTable:
    rows: tuple[FTestRow, ...]
    ss_residual: float
    df_residual: int

    @property
    def ms_residual(self) -> float:
        return self.ss_residual / self.df_residual

    def row(self, component: str | Component) -> FTestRow:
        for row in self.rows:
            if row.component == str(component):
                return row
        raise KeyError(component)

    def to_frame(self) -> pl.DataFrame:
        frame = pl.DataFrame(
            {
                "component": [r.component for r in self.rows] + ["residual"],
                "ss": [r.ss for r in self.rows] + [self.ss_residual],
                "df": [r.df for r in self.rows] + [self.df_residual],
                "ms": [r.ms for r in self.rows] + [self.ms_residual],
                "F": [r.f for r in self.rows] + [None],
                "p_value": [r.p_value for r in self.rows] + [None],
                "partial_eta2": [r.partial_eta2 for r in self.rows] + [None],
            },
            schema={
                "component": pl.String,
                "ss": pl.Float64,
                "df": pl.Int64,
                "ms": pl.Float64,
                "F": pl.Float64,
                "p_value": pl.Float64,
                "partial_eta2": pl.Float64,
            },
        )
        # stored as 0 below the floor; text output shows "< 1e-300"
        return frame.with_columns(
            pl.when(pl.col("p_value") < P_VALUE_FLOOR)
            .then(0.0)
            .otherwise(pl.col("p_value"))
            .alias("p_value")
        )


def format_p_value(p: float) -> str:
    return f"< {P_VALUE_FLOOR:.0e}" if p < P_VALUE_FLOOR else f"{p:.3g}"


def f_table(
    ss: Mapping[str, float],
    df: Mapping[str, int],
    ss_residual: float,
    df_residual: int,
) -> FTable:
    """
    F = (ss/df) / (ss_residual/df_residual); partial η² = ss / (ss + ss_residual).
    With a zero residual, F is inf for a component with variance and nan for one without.
    """
    if df_residual <= 0:
        raise StructuralError(f"Residual degrees of freedom must be positive, got {df_residual}")
    ms_residual = ss_residual / df_residual
    rows = []
    for name, value in ss.items():
        ms = value / df[name]
        if ms_residual > 0:
            f_value = ms / ms_residual
        else:
            # 0/0 is undefined
            f_value = float("inf") if value > 0 else float("nan")
        denominator = value + ss_residual
        rows.append(
            FTestRow(
                component=str(name),
                ss=value,
                df=df[name],
                ms=ms,
                f=f_value,
                p_value=f_sf(f_value, df[name], df_residual),
                partial_eta2=value / denominator if denominator > 0 else 0.0,
            )
        )
    return FTable(tuple(rows), ss_residual, df_residual)


def f_tests(grid: SlopeGrid, components: ComponentSet) -> FTable:
    """
    F tests of μ, α, β and γ from the sequential components of a complete grid.
    Degrees of freedom are T−1, D−1, (D−1)(T−1), D(S−1) and D·T·S − 72 on 6×9×4.
    """
    n_domains, n_horizon, n_size = grid.shape
    design = build_design(n_domains, n_horizon, n_size)
    ss = {
        Component.MU.value: float(
            n_domains * n_size * ((components.mu - components.mu.mean()) ** 2).sum()
        ),
        Component.ALPHA.value: float(n_horizon * n_size * (components.alpha**2).sum()),
        Component.BETA.value: float(n_size * (components.beta**2).sum()),
        Component.GAMMA.value: float(n_horizon * (components.gamma**2).sum()),
    }
    df = {c.value: design.df(c) for c in CANONICAL_ORDER}
    df_residual = design.n_cells - 1 - sum(df.values())
    return f_table(ss, df, float((components.residual**2).sum()), df_residual)
