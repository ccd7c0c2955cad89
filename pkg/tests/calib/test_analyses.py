import numpy as np
import pytest

from src.calib import (
    domain_weighting_gap,
    fit_recalibration,
    horizon_grid,
    leave_one_out,
    pooled_slope,
    size_table_with_delta,
    slope_table,
    subgroup_slopes,
    weighting_gap,
)
from src.common.grid import CellData, CellKey, pool_cells
from src.config import FitConfig
from src.constants import WeightScheme
from src.errors import DataError
from src.synth.oracle import oracle_fit
from tests.factories import simulate_cell


def _domain_cells(domain: str, horizons: range, sizes: range, counts=(1, 1)) -> dict[CellKey, CellData]:
    return {
        CellKey(domain, t, s): simulate_cell(
            0.8 + 0.1 * t, 400, seed=100 * t + s, key=CellKey(domain, t, s), counts=counts
        )
        for t in horizons
        for s in sizes
    }


def test_pooled_slope_of_one_cell_is_the_cell_fit(fit_cfg) -> None:
    cell = simulate_cell(1.2, 600, seed=1, counts=(1, 10))
    assert pooled_slope(cell, fit_cfg) == fit_recalibration(cell, fit_cfg)
    assert pooled_slope([cell], fit_cfg) == fit_recalibration(cell, fit_cfg)


def test_pooled_mixture_lies_between_component_slopes(trade_cfg) -> None:
    flat = simulate_cell(0.5, 3_000, seed=21)
    steep = simulate_cell(2.0, 3_000, seed=22)
    fit = pooled_slope([flat, steep], trade_cfg)
    assert 0.5 < fit.b < 2.0
    a, b = oracle_fit(pool_cells([flat, steep]), trade_cfg)
    assert fit.a == pytest.approx(a, abs=1e-3)
    assert fit.b == pytest.approx(b, abs=1e-3)


def test_leave_one_out_of_identical_groups(fit_cfg) -> None:
    cell = simulate_cell(1.1, 500, seed=3, counts=(1, 4))
    result = leave_one_out({"A": cell, "B": cell}, fit_cfg)
    single = fit_recalibration(cell, fit_cfg)
    assert result.fits == {"A": single, "B": single}
    assert result.failures == {}


def test_leave_one_out_refits_complement_pool(fit_cfg) -> None:
    groups = {
        name: simulate_cell(theta, 400, seed=seed, counts=(1, 6))
        for name, theta, seed in (("Trump", 0.6, 7), ("Senate", 1.2, 8), ("Fed", 1.6, 9))
    }
    result = leave_one_out(groups, fit_cfg)
    for label, fit in result.fits.items():
        rest = pool_cells([data for other, data in groups.items() if other != label])
        direct = fit_recalibration(rest, fit_cfg)
        assert fit.b == pytest.approx(direct.b, abs=1e-12)
        assert fit.n == direct.n


def test_leave_one_out_degenerate_pool_is_reported_per_label(trade_cfg) -> None:
    key = CellKey("Politics", 0, 0)
    yes_only = CellData.from_arrays(key, [20, 60, 80], [1, 1, 1])
    groups = {
        "mixed": simulate_cell(1.0, 300, seed=4),
        "yes_a": yes_only,
        "yes_b": yes_only,
    }
    result = leave_one_out(groups, trade_cfg)
    assert set(result.failures) == {"mixed"}
    assert set(result.fits) == {"yes_a", "yes_b"}


def test_leave_one_out_needs_two_groups(fit_cfg) -> None:
    with pytest.raises(DataError, match="at least 2 groups"):
        leave_one_out({"only": simulate_cell(1.0, 50, seed=1)}, fit_cfg)


def test_subgroup_slopes_keep_going_past_failures(trade_cfg) -> None:
    key = CellKey("Politics", 0, 0)
    result = subgroup_slopes(
        {
            "ok": simulate_cell(1.0, 300, seed=2),
            "flat": CellData.from_arrays(key, [50, 50, 50], [1, 0, 1]),
        },
        trade_cfg,
    )
    assert set(result.fits) == {"ok"}
    assert "distinct prices" in result.failures["flat"]


def test_weighting_gap_vanishes_with_single_contracts(fit_cfg) -> None:
    cells = _domain_cells("Politics", range(9), range(2))
    gap = domain_weighting_gap(cells, "Politics", fit_cfg)
    assert gap.skipped == []
    assert all(value == 0.0 for value in gap.gaps.values())
    assert gap.mean == 0.0


def test_weighting_gap_skips_missing_bins(fit_cfg) -> None:
    cells = _domain_cells("Politics", range(3), range(2), counts=(1, 50))
    gap = domain_weighting_gap(cells, "Politics", fit_cfg)
    assert sorted(gap.gaps) == [0, 1, 2]
    assert gap.skipped == [3, 4, 5, 6, 7, 8]
    assert gap.peak_bin in gap.gaps


def test_large_contrarian_trades_flatten_contract_slope(fit_cfg) -> None:
    key = CellKey("Politics", 0, 0)
    base = simulate_cell(1.0, 998, seed=12, key=key)
    whales = CellData.from_arrays(key, [10, 90], [1, 0], contract_count=[500, 500])
    cell = pool_cells([base, whales])
    cells = {key: cell}
    gap = domain_weighting_gap(cells, "Politics", fit_cfg, n_horizon=1)

    trade = fit_recalibration(cell, fit_cfg.model_copy(update={"weight_scheme": WeightScheme.TRADE}))
    contract = fit_recalibration(cell, fit_cfg.model_copy(update={"weight_scheme": WeightScheme.CONTRACT}))
    assert gap.gaps[0] < 0
    assert gap.gaps[0] == pytest.approx(contract.b - trade.b, abs=1e-12)


def test_weighting_gap_mean_and_peak() -> None:
    cfg = FitConfig(weight_scheme=WeightScheme.TRADE)
    cell = simulate_cell(1.0, 300, seed=5)
    fit = fit_recalibration(cell, cfg)
    steeper = fit_recalibration(simulate_cell(1.8, 300, seed=5), cfg)
    gap = weighting_gap({0: fit, 1: fit}, {0: fit, 1: steeper}, n_horizon=2)
    assert gap.gaps[0] == 0.0
    assert gap.peak_bin == 1
    assert gap.mean == pytest.approx((steeper.b - fit.b) / 2)


def test_empty_weighting_gap() -> None:
    gap = weighting_gap({}, {}, n_horizon=3)
    assert np.isnan(gap.mean)
    assert gap.peak_bin is None
    assert gap.skipped == [0, 1, 2]


def test_slope_table_by_horizon_and_size(fit_cfg) -> None:
    cells = _domain_cells("Sports", range(2), range(4)) | _domain_cells("Crypto", range(1), range(4))
    by_horizon = slope_table(cells, fit_cfg, by="horizon")
    assert by_horizon.columns == ["domain", "bin", "n", "a", "b", "se_b"]
    assert by_horizon.select("domain", "bin").rows() == [("Crypto", 0), ("Sports", 0), ("Sports", 1)]
    assert by_horizon.filter(domain="Sports", bin=1)["n"].item() == 1_600

    by_size = slope_table(cells, fit_cfg, by="size", domains=["Sports"])
    assert by_size["bin"].to_list() == [0, 1, 2, 3]
    assert by_size["n"].to_list() == [800] * 4


def test_size_table_delta_column(fit_cfg) -> None:
    cells = _domain_cells("Sports", range(2), range(4))
    wide = size_table_with_delta(slope_table(cells, fit_cfg, by="size"))
    assert wide.columns == ["domain", "size_0", "size_1", "size_2", "size_3", "delta_large_single"]
    row = wide.row(0, named=True)
    assert row["delta_large_single"] == pytest.approx(row["size_3"] - row["size_0"])


def test_size_table_without_largest_bin(fit_cfg) -> None:
    cells = _domain_cells("Sports", range(1), range(2))
    wide = size_table_with_delta(slope_table(cells, fit_cfg, by="size"))
    assert wide["delta_large_single"].to_list() == [None]


def test_horizon_grid_has_one_size_column(fit_cfg) -> None:
    cells = _domain_cells("Sports", range(3), range(2))
    grid = horizon_grid(cells, fit_cfg, domains=["Sports"])
    assert grid.shape == (1, 9, 1)
    assert np.isfinite(grid.theta[0, :3, 0]).all()
    assert np.isnan(grid.theta[0, 3:, 0]).all()
