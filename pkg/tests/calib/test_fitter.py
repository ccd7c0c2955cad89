import numpy as np
import pytest

from src.calib import fit_arrays, fit_cells, fit_recalibration, slope_grid
from src.calib.fitter import newton_path, penalized_gradient
from src.common.grid import CellData, CellKey
from src.config import FitConfig
from src.constants import WeightScheme
from src.errors import IdentificationError, SeparationError
from src.synth.oracle import oracle_fit
from tests.factories import simulate_cell

KEY = CellKey("Politics", 4, 1)


def _forty_rows() -> CellData:
    """Eight trades at each of five prices with 1, 2, 4, 6 and 7 YES outcomes."""
    price, outcome = [], []
    for cents, yes in ((10, 1), (30, 2), (50, 4), (70, 6), (90, 7)):
        price += [cents] * 8
        outcome += [1] * yes + [0] * (8 - yes)
    counts = [1 + (i % 5) for i in range(40)]
    return CellData.from_arrays(KEY, price, outcome, contract_count=counts)


def _two_point(n: int = 10_000) -> CellData:
    half = n // 2
    price = [20] * half + [80] * half
    outcome = (
        [1] * (half // 5) + [0] * (half - half // 5)
        + [1] * (4 * half // 5) + [0] * (half - 4 * half // 5)
    )
    return CellData.from_arrays(KEY, price, outcome)


def test_perfectly_calibrated_two_point_design(trade_cfg) -> None:
    fit = fit_recalibration(_two_point(), trade_cfg)
    assert fit.converged
    assert fit.a == pytest.approx(0.0, abs=0.02)
    assert fit.b == pytest.approx(1.0, abs=0.02)
    assert fit.n == 10_000


@pytest.mark.parametrize("scheme", [WeightScheme.TRADE, WeightScheme.CONTRACT])
def test_matches_grid_search_oracle(scheme) -> None:
    cfg = FitConfig(weight_scheme=scheme)
    cell = _forty_rows()
    fit = fit_recalibration(cell, cfg)
    a, b = oracle_fit(cell, cfg)
    assert fit.a == pytest.approx(a, abs=1e-3)
    assert fit.b == pytest.approx(b, abs=1e-3)


def test_gradient_vanishes_at_optimum(fit_cfg) -> None:
    cell = simulate_cell(theta=1.4, n=3_000, seed=11, counts=(1, 20))
    fit = fit_recalibration(cell, fit_cfg)
    x = np.log(cell.price_fraction / (1 - cell.price_fraction))
    grad = penalized_gradient(
        fit.a, fit.b, x, cell.outcome.astype(float), cell.weights(fit_cfg.weight_scheme),
        fit_cfg.regularization_C,
    )
    assert np.linalg.norm(grad) < 1e-6


def test_objective_never_decreases_along_newton_path(trade_cfg) -> None:
    cell = simulate_cell(theta=0.6, n=500, seed=2)
    x = np.log(cell.price_fraction / (1 - cell.price_fraction))
    path = newton_path(
        x, cell.outcome.astype(float), cell.weights(WeightScheme.TRADE), trade_cfg,
        start=(3.0, 4.0),
    )
    assert path.converged
    assert np.all(np.diff(path.objective_trace) >= 0.0)


def test_standard_errors_and_loglik_sign(trade_cfg) -> None:
    fit = fit_recalibration(simulate_cell(theta=1.2, n=2_000, seed=5), trade_cfg)
    assert fit.se_b > 0
    assert fit.se_a > 0
    assert fit.loglik <= 0
    assert fit.effective_weight == pytest.approx(2_000)


def test_scaling_weights_scales_loglik_only(trade_cfg) -> None:
    cell = simulate_cell(theta=1.3, n=1_000, seed=8)
    w = np.ones(cell.n)
    base = fit_arrays(cell.price_fraction, cell.outcome, w, trade_cfg)
    scaled = fit_arrays(cell.price_fraction, cell.outcome, 7.0 * w, trade_cfg)
    assert scaled.a == pytest.approx(base.a, abs=1e-8)
    assert scaled.b == pytest.approx(base.b, abs=1e-8)
    assert scaled.loglik == pytest.approx(7.0 * base.loglik, rel=1e-10)


def test_unit_contract_counts_reproduce_trade_weighting(fit_cfg, trade_cfg) -> None:
    cell = simulate_cell(theta=0.9, n=800, seed=4, counts=(1, 1))
    assert fit_recalibration(cell, fit_cfg) == fit_recalibration(cell, trade_cfg)


def test_equal_contract_counts_keep_slope(fit_cfg, trade_cfg) -> None:
    cell = simulate_cell(theta=0.9, n=800, seed=4, counts=(3, 3))
    contract = fit_recalibration(cell, fit_cfg)
    trade = fit_recalibration(cell, trade_cfg)
    assert contract.b == pytest.approx(trade.b, abs=1e-9)
    assert contract.loglik == pytest.approx(3.0 * trade.loglik, rel=1e-10)


def test_results_insensitive_to_regularization_on_large_cells() -> None:
    cell = simulate_cell(theta=1.5, n=20_000, seed=13)
    slopes = [
        fit_recalibration(cell, FitConfig(regularization_C=c, weight_scheme=WeightScheme.TRADE)).b
        for c in (1.0, 10.0, 100.0)
    ]
    assert max(slopes) - min(slopes) < 1e-3


def test_single_outcome_cell_is_separated(trade_cfg) -> None:
    cell = CellData.from_arrays(KEY, [20, 40, 60], [1, 1, 1])
    with pytest.raises(SeparationError, match="unbounded"):
        fit_recalibration(cell, trade_cfg)


def test_single_price_cell_is_not_identified(trade_cfg) -> None:
    cell = CellData.from_arrays(KEY, [40, 40, 40, 40], [1, 0, 1, 0])
    with pytest.raises(IdentificationError):
        fit_recalibration(cell, trade_cfg)


def test_single_observation_is_not_identified(trade_cfg) -> None:
    with pytest.raises(IdentificationError, match="at least 2"):
        fit_recalibration(CellData.from_arrays(KEY, [40], [1]), trade_cfg)


def test_iteration_cap_reports_non_convergence() -> None:
    cfg = FitConfig(weight_scheme=WeightScheme.TRADE, max_iterations=1)
    fit = fit_recalibration(simulate_cell(theta=2.5, n=2_000, seed=6), cfg)
    assert not fit.converged
    assert fit.iterations == 1


def test_predict_applies_fitted_curve(trade_cfg) -> None:
    fit = fit_recalibration(_two_point(), trade_cfg)
    assert fit.predict(0.5) == pytest.approx(1 / (1 + np.exp(-fit.a)))
    assert fit.predict(np.array([0.2, 0.8])) == pytest.approx([0.2, 0.8], abs=0.01)


def test_fit_cells_collects_failures_and_ignores_thread_count(fit_cfg) -> None:
    cells = {
        CellKey("Sports", t, s): simulate_cell(1.0 + 0.1 * t, 300, seed=10 * t + s, key=CellKey("Sports", t, s), counts=(1, 9))
        for t in range(3)
        for s in range(2)
    }
    broken = CellKey("Sports", 3, 0)
    cells[broken] = CellData.from_arrays(broken, [30, 60], [0, 0])

    serial = fit_cells(cells, fit_cfg, threads=1)
    parallel = fit_cells(cells, fit_cfg, threads=4)
    assert serial.fits == parallel.fits
    assert set(serial.failures) == {broken}
    assert "unbounded" in serial.failures[broken]


def test_slope_grid_leaves_unfitted_cells_nan(fit_cfg) -> None:
    key = CellKey("Sports", 2, 3)
    fits = fit_cells({key: simulate_cell(1.1, 400, seed=1, key=key)}, fit_cfg)
    grid = slope_grid(fits, domains=["Sports", "Weather"])
    assert grid.shape == (2, 9, 4)
    assert grid.theta[0, 2, 3] == pytest.approx(fits.fits[key].b)
    assert np.isnan(grid.theta).sum() == 2 * 9 * 4 - 1
    assert grid.n[0, 2, 3] == 400
