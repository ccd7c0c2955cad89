import numpy as np
import pytest
from scipy import stats

from src.bayes import (
    BayesModel,
    BayesModelSpec,
    SamplerSettings,
    hamiltonian_drift,
    sample,
    sample_posterior,
    single_cell_mask,
)
from src.bayes.nuts import warmup_windows
from src.common.grid import SlopeGrid

DOMAINS = ("Politics", "Sports")
FIXED = {"sigma_alpha": 0.0, "sigma_beta": 0.0, "sigma_delta": 0.0}


class StandardNormal:
    """Independent N(0, 1) coordinates."""

    dim = 3

    def logp_and_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        return -0.5 * float(u @ u), -u

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1, 1, size=self.dim)

    def constrained_vector(self, u: np.ndarray) -> np.ndarray:
        return u.copy()

    def parameter_names(self) -> list[str]:
        return ["x", "y", "z"]


def _grid(value: float = 1.6) -> SlopeGrid:
    return SlopeGrid.from_values(DOMAINS, np.full((2, 9, 4), value))


def test_warmup_windows_double() -> None:
    assert warmup_windows(1000) == [(75, 100), (100, 150), (150, 250), (250, 450), (450, 950)]
    assert warmup_windows(100) == [(15, 90)]
    assert warmup_windows(10) == []


def test_standard_normal_moments() -> None:
    draws = sample(StandardNormal(), SamplerSettings(chains=2, warmup=300, keep=1500, seed=5))
    values = draws.values.reshape(-1, 3)
    assert np.abs(values.mean(axis=0)).max() < 0.1
    np.testing.assert_allclose(values.std(axis=0), 1.0, atol=0.1)
    assert draws.divergence_count == 0


def test_draws_do_not_depend_on_threads() -> None:
    settings = SamplerSettings(chains=3, warmup=50, keep=50, seed=11)
    serial = sample(StandardNormal(), settings, threads=1)
    parallel = sample(StandardNormal(), settings, threads=3)
    np.testing.assert_array_equal(serial.values, parallel.values)
    np.testing.assert_array_equal(serial.step_size, parallel.step_size)


def test_draw_frames() -> None:
    draws = sample(StandardNormal(), SamplerSettings(chains=2, warmup=20, keep=10, seed=1))
    frame = draws.to_frame()
    assert frame.columns == ["chain", "iter", "x", "y", "z"]
    assert frame.height == 20
    assert draws.stats_frame().columns == [
        "chain", "iter", "accept_stat", "tree_depth", "n_leapfrog", "divergent", "energy",
    ]
    assert draws.column("y").shape == (2, 10)


def test_leapfrog_energy_error_shrinks_with_step() -> None:
    model = BayesModel(_grid(1.0))
    rng = np.random.default_rng(3)
    q = rng.uniform(-0.5, 0.5, size=model.dim)
    p = rng.standard_normal(model.dim)
    coarse = hamiltonian_drift(model, q, p, step_size=0.02, length=1.0)
    fine = hamiltonian_drift(model, q, p, step_size=0.002, length=1.0)
    assert fine < coarse / 20


def test_single_cell_conjugate_posterior() -> None:
    sigma, observed = 0.2, 1.6
    spec = BayesModelSpec(fixed_scales={**FIXED, "sigma": sigma})
    mask = single_cell_mask((2, 9, 4), (0, 3, 1))
    draws = sample_posterior(
        _grid(observed), spec, SamplerSettings(chains=4, warmup=400, keep=1000, seed=17),
        cell_mask=mask,
    )
    precision = 4.0 + 1.0 / sigma**2
    mean = (4.0 * 1.0 + observed / sigma**2) / precision
    mu3 = draws.column("mu[3]").ravel()
    assert mu3.mean() == pytest.approx(mean, abs=0.03)
    assert mu3.std() == pytest.approx(precision**-0.5, rel=0.15)

    # horizon bins without data keep the prior
    mu0 = draws.column("mu[0]").ravel()
    assert mu0.mean() == pytest.approx(1.0, abs=0.08)
    assert mu0.std() == pytest.approx(0.5, rel=0.15)


def test_empty_mask_recovers_prior() -> None:
    mask = np.zeros((2, 9, 4), dtype=bool)
    draws = sample_posterior(
        _grid(), BayesModelSpec(), SamplerSettings(chains=4, warmup=500, keep=1000, seed=23),
        cell_mask=mask,
    )
    mu = draws.column("mu[5]").ravel()[::4]
    assert stats.kstest(mu, stats.norm(loc=1.0, scale=0.5).cdf).pvalue > 1e-4

    sigma = draws.column("sigma").ravel()
    quartiles = np.percentile(sigma, [25, 50, 75])
    # half-Cauchy(0, 1) quartiles are tan(π/8), 1 and tan(3π/8)
    np.testing.assert_allclose(quartiles, [np.tan(np.pi / 8), 1.0, np.tan(3 * np.pi / 8)], rtol=0.2)
