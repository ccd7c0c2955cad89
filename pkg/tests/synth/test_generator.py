import numpy as np
import pytest
from pydantic import ValidationError
from scipy.special import expit

from src.bronze.loader import MARKET_COLUMNS, RULE_COLUMNS, TRADE_COLUMNS
from src.calib import fit_recalibration
from src.common.grid import CellKey
from src.config import BinningConfig, FitConfig, load_config
from src.constants import WeightScheme
from src.errors import ConfigError
from src.synth import (
    ContractCountLaw,
    CountLaw,
    LatentLaw,
    LatentProbLaw,
    SynthSpec,
    TargetMode,
    TradeCountLaw,
    TradesPerMarket,
    generate,
    horizon_midpoints,
    size_ranges,
)

SMALL = {
    "domains": ["Sports", "Politics"],
    "markets_per_cell": 20,
    "trades_per_market": 10,
    "cells": [("Sports", 0, 0), ("Sports", 4, 3), ("Politics", 8, 1)],
    "seed": 9,
}


def test_bin_geometry() -> None:
    binning = BinningConfig()
    np.testing.assert_allclose(
        horizon_midpoints(binning), [0.5, 2, 4.5, 9, 18, 36, 108, 444, 1080]
    )
    assert size_ranges(binning, 1000) == [(1, 1), (2, 10), (11, 100), (101, 1000)]


def test_spec_rejects_cells_below_minimum() -> None:
    with pytest.raises(ValidationError, match="below min_trades_per_cell"):
        SynthSpec(markets_per_cell=5, trades_per_market=10)


def test_spec_rejects_unknown_scale_domain() -> None:
    with pytest.raises(ValidationError, match="unknown domains"):
        SynthSpec(domains=["Sports"], scale_effect={"Weather": 0.3})


def test_spec_rejects_cell_outside_grid() -> None:
    with pytest.raises(ValidationError, match="outside the grid"):
        SynthSpec(domains=["Sports"], cells=[("Sports", 9, 0)])


def test_spec_loaded_from_toml_with_bad_key(tmp_path) -> None:
    path = tmp_path / "synth.toml"
    path.write_text('theta = 1.4\nthta = 2.0\n')
    with pytest.raises(ConfigError, match="thta"):
        load_config(SynthSpec, path)


def test_constant_components_with_scale_effect() -> None:
    spec = SynthSpec(domains=["Sports", "Politics"], theta=1.3, scale_effect={"Politics": 0.6})
    target = spec.components().predict()
    np.testing.assert_allclose(target[0], 1.3)
    np.testing.assert_allclose(target[1, :, 3] - target[1, :, 0], 0.6)
    assert spec.components().check_constraints(atol=1e-12)


def test_random_components_are_seeded() -> None:
    a = SynthSpec(mode=TargetMode.RANDOM, seed=4).components()
    b = SynthSpec(mode=TargetMode.RANDOM, seed=4).components()
    c = SynthSpec(mode=TargetMode.RANDOM, seed=5).components()
    np.testing.assert_array_equal(a.predict(), b.predict())
    assert not np.array_equal(a.predict(), c.predict())


def test_non_positive_target_slope() -> None:
    spec = SynthSpec(domains=["Sports"], theta=-0.5, cells=[("Sports", 0, 0)])
    with pytest.raises(ConfigError, match="must be positive"):
        generate(spec)


def test_generation_is_deterministic_across_threads() -> None:
    spec = SynthSpec(**SMALL)
    serial = generate(spec, threads=1)
    parallel = generate(spec, threads=3)
    for key in spec.cell_keys():
        np.testing.assert_array_equal(serial.cells[key].price, parallel.cells[key].price)
        np.testing.assert_array_equal(serial.cells[key].outcome, parallel.cells[key].outcome)
    assert serial.trades_frame().equals(parallel.trades_frame())


def test_subset_reproduces_full_grid_cells() -> None:
    subset = generate(SynthSpec(**SMALL))
    full = generate(SynthSpec(**{**SMALL, "cells": None}))
    key = CellKey("Politics", 8, 1)
    np.testing.assert_array_equal(subset.cells[key].price, full.cells[key].price)
    np.testing.assert_array_equal(subset.cells[key].contract_count, full.cells[key].contract_count)


def test_trades_land_in_their_bins() -> None:
    data = generate(SynthSpec(**SMALL))
    ranges = size_ranges(BinningConfig(), 1000)
    for key, cell in data.cells.items():
        lo, hi = ranges[key.size_bin]
        assert cell.n == 200
        assert cell.contract_count.min() >= lo
        assert cell.contract_count.max() <= hi
        assert cell.price.min() >= 5 and cell.price.max() <= 95
        # every trade of a market shares the market outcome
        assert len(set(zip(cell.market_id, cell.outcome))) == 20


def test_frames_follow_ingest_schemas() -> None:
    frames = generate(SynthSpec(**SMALL)).frames()
    assert list(frames) == ["trades.csv", "markets.csv", "rules.csv", "truth.csv"]
    assert tuple(frames["trades.csv"].columns) == TRADE_COLUMNS
    assert tuple(frames["markets.csv"].columns) == MARKET_COLUMNS
    assert tuple(frames["rules.csv"].columns) == RULE_COLUMNS
    assert frames["trades.csv"].height == 600
    assert frames["markets.csv"].height == 60
    assert frames["markets.csv"]["market_id"].is_unique().all()
    assert set(frames["trades.csv"]["market_id"]) == set(frames["markets.csv"]["market_id"])
    assert frames["rules.csv"]["pattern"].to_list() == ["SYN-Sports-", "SYN-Politics-"]
    assert frames["truth.csv"]["theta"].to_list() == [1.0, 1.0, 1.0]


@pytest.mark.slow
def test_slope_recovered_from_independent_markets() -> None:
    spec = SynthSpec(
        domains=["Sports"],
        theta=1.5,
        markets_per_cell=100_000,
        trades_per_market=1,
        cells=[("Sports", 3, 0)],
        seed=31,
    )
    data = generate(spec)
    fit = fit_recalibration(
        data.cells[CellKey("Sports", 3, 0)], FitConfig(weight_scheme=WeightScheme.TRADE)
    )
    assert data.clamped_fraction < 0.05
    assert fit.b == pytest.approx(1.5, abs=0.05)
    assert fit.a == pytest.approx(0.0, abs=0.05)


def test_plain_trade_count_is_a_fixed_law() -> None:
    spec = SynthSpec(**SMALL)
    assert spec.trades_per_market == TradesPerMarket(law=TradeCountLaw.FIXED, mean=10)


def test_fixed_trade_count_must_be_whole() -> None:
    with pytest.raises(ValidationError, match="integer mean"):
        TradesPerMarket(mean=12.5)


def test_poisson_trades_per_market() -> None:
    spec = SynthSpec(
        **{**SMALL, "trades_per_market": {"law": "poisson", "mean": 12}, "markets_per_cell": 400}
    )
    data = generate(spec)
    for cell in data.cells.values():
        _, per_market = np.unique(cell.market_id, return_counts=True)
        assert per_market.size == 400
        assert per_market.min() >= 1
        assert per_market.mean() == pytest.approx(12, rel=0.1)
        assert per_market.std() > 1


def test_uniform_trades_per_market_stay_in_range() -> None:
    law = TradesPerMarket(law=TradeCountLaw.UNIFORM, low=5, high=15)
    data = generate(SynthSpec(**{**SMALL, "trades_per_market": law}))
    for cell in data.cells.values():
        _, per_market = np.unique(cell.market_id, return_counts=True)
        assert per_market.min() >= 5 and per_market.max() <= 15


def test_expected_trades_decide_the_minimum_check() -> None:
    uniform = TradesPerMarket(law=TradeCountLaw.UNIFORM, low=1, high=5)
    with pytest.raises(ValidationError, match="below min_trades_per_cell"):
        SynthSpec(markets_per_cell=60, trades_per_market=uniform)
    assert SynthSpec(markets_per_cell=70, trades_per_market=uniform).trades_per_market.expected == 3


def test_trade_law_loaded_from_toml(tmp_path) -> None:
    path = tmp_path / "synth.toml"
    path.write_text(
        'markets_per_cell = 40\n\n[trades_per_market]\nlaw = "poisson"\nmean = 8.5\n\n'
        '[latent_prob_law]\nlaw = "beta"\na = 3.0\nb = 1.5\n'
    )
    spec = load_config(SynthSpec, path)
    assert spec.trades_per_market.law == TradeCountLaw.POISSON
    assert spec.latent_prob_law == LatentProbLaw(law=LatentLaw.BETA, a=3.0, b=1.5)


@pytest.mark.parametrize(
    ("law", "mean_q"),
    [
        (LatentProbLaw(law=LatentLaw.BETA, a=3.0, b=1.0), 0.75),
        (LatentProbLaw(law=LatentLaw.UNIFORM, low=0.2, high=0.4), 0.3),
        (LatentProbLaw(mean=0.0, sd=1.0), 0.5),
    ],
)
def test_latent_laws(law: LatentProbLaw, mean_q: float) -> None:
    logit_q = law.draw_logit(np.random.default_rng(3), 50_000)
    assert np.isfinite(logit_q).all()
    assert expit(logit_q).mean() == pytest.approx(mean_q, abs=0.01)


def test_uniform_latent_law_needs_ordered_bounds() -> None:
    with pytest.raises(ValidationError, match="must be below"):
        LatentProbLaw(law=LatentLaw.UNIFORM, low=0.6, high=0.4)


def test_contract_count_laws() -> None:
    rng = np.random.default_rng(8)
    log_uniform = ContractCountLaw().draw(rng, 11, 100, 20_000)
    uniform = ContractCountLaw(law=CountLaw.UNIFORM).draw(rng, 11, 100, 20_000)
    for counts in (log_uniform, uniform):
        assert counts.min() == 11 and counts.max() == 100
    # log-uniform piles up at the low end of the bin
    assert np.median(log_uniform) < 40 < np.median(uniform)
    np.testing.assert_array_equal(ContractCountLaw().draw(rng, 1, 1, 3), [1, 1, 1])


def test_max_contracts_bounds_the_last_size_bin() -> None:
    with pytest.raises(ValidationError, match="max_contracts"):
        SynthSpec(contract_count_law=ContractCountLaw(max_contracts=100))
    spec = SynthSpec(**{**SMALL, "contract_count_law": {"max_contracts": 150}})
    large = generate(spec).cells[CellKey("Sports", 4, 3)]
    assert large.contract_count.max() <= 150


def test_cell_intercepts_override_the_default() -> None:
    spec = SynthSpec(**{**SMALL, "intercept": 0.1, "cell_intercepts": [("Sports", 4, 3, -0.4)]})
    assert spec.intercept_for(CellKey("Sports", 4, 3)) == -0.4
    assert spec.intercept_for(CellKey("Sports", 0, 0)) == 0.1
    truth = generate(spec).truth_frame()
    assert truth["intercept"].to_list() == [0.1, 0.1, -0.4]


def test_cell_intercepts_are_validated() -> None:
    with pytest.raises(ValidationError, match="outside the grid"):
        SynthSpec(domains=["Sports"], cell_intercepts=[("Sports", 0, 7, 0.2)])
    with pytest.raises(ValidationError, match="twice"):
        SynthSpec(domains=["Sports"], cell_intercepts=[("Sports", 0, 0, 0.2), ("Sports", 0, 0, 0.3)])


@pytest.mark.slow
def test_per_cell_intercepts_recovered() -> None:
    planted = {("Politics", 2, 0): 0.5, ("Politics", 6, 2): -0.4}
    spec = SynthSpec(
        domains=["Politics"],
        theta=1.3,
        markets_per_cell=60_000,
        trades_per_market=1,
        cells=list(planted),
        cell_intercepts=[(*cell, a) for cell, a in planted.items()],
        seed=17,
    )
    data = generate(spec)
    assert data.clamped_fraction < 0.05
    for (domain, t, s), a in planted.items():
        fit = fit_recalibration(
            data.cells[CellKey(domain, t, s)], FitConfig(weight_scheme=WeightScheme.TRADE)
        )
        assert fit.a == pytest.approx(a, abs=0.06)
        assert fit.b == pytest.approx(1.3, abs=0.06)
