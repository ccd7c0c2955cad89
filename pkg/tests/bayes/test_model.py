import numpy as np
import pytest

from src.bayes import BayesModel, BayesModelSpec, single_cell_mask, sum_to_zero_basis
from src.common.grid import SlopeGrid
from src.constants import BetaConstraint
from src.errors import IncompleteGridError, SamplerError

DOMAINS = ("Crypto", "Politics", "Sports")


@pytest.fixture
def grid() -> SlopeGrid:
    rng = np.random.default_rng(0)
    return SlopeGrid.from_values(DOMAINS, 1.0 + 0.3 * rng.standard_normal((3, 9, 4)))


def _finite_difference(model: BayesModel, u: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(u)
    for i in range(u.size):
        up, down = u.copy(), u.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (model.logp_and_grad(up)[0] - model.logp_and_grad(down)[0]) / (2 * h)
    return grad


@pytest.mark.parametrize("constraint", list(BetaConstraint))
def test_gradient_matches_finite_differences(grid, constraint) -> None:
    model = BayesModel(grid, BayesModelSpec(beta_constraint=constraint))
    u = np.random.default_rng(1).uniform(-0.8, 0.8, size=model.dim)
    _, grad = model.logp_and_grad(u)
    np.testing.assert_allclose(grad, _finite_difference(model, u), rtol=1e-5, atol=1e-5)


def test_gradient_with_fixed_scales_and_mask(grid) -> None:
    spec = BayesModelSpec(fixed_scales={"sigma_delta": 0.3, "sigma": 0.2})
    mask = np.zeros(grid.shape, dtype=bool)
    mask[:, 2:, :] = True
    model = BayesModel(grid, spec, mask)
    assert "log_sigma" not in model.layout.slices
    u = np.random.default_rng(2).uniform(-0.5, 0.5, size=model.dim)
    np.testing.assert_allclose(
        model.logp_and_grad(u)[1], _finite_difference(model, u), rtol=1e-5, atol=1e-5
    )


@pytest.mark.parametrize(("constraint", "dim"), [(BetaConstraint.DOUBLE, 9 + 2 + 16 + 3 + 4), (BetaConstraint.SINGLE, 9 + 2 + 18 + 3 + 4)])
def test_parameter_layout(grid, constraint, dim) -> None:
    model = BayesModel(grid, BayesModelSpec(beta_constraint=constraint))
    assert model.dim == dim
    names = model.parameter_names()
    assert names[:2] == ["mu[0]", "mu[1]"]
    assert "beta[Sports,8]" in names
    assert names[-4:] == ["sigma_alpha", "sigma_beta", "sigma_delta", "sigma"]
    assert len(model.constrained_vector(np.zeros(model.dim))) == len(names)


def test_constrained_effects_sum_to_zero(grid) -> None:
    model = BayesModel(grid)
    params = model.constrain(np.random.default_rng(3).standard_normal(model.dim))
    assert abs(params.alpha.sum()) < 1e-12
    np.testing.assert_allclose(params.beta.sum(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(params.beta.sum(axis=1), 0.0, atol=1e-12)


def test_single_constraint_centres_over_domains_only(grid) -> None:
    model = BayesModel(grid, BayesModelSpec(beta_constraint=BetaConstraint.SINGLE))
    params = model.constrain(np.random.default_rng(4).standard_normal(model.dim))
    np.testing.assert_allclose(params.beta.sum(axis=0), 0.0, atol=1e-12)
    assert np.abs(params.beta.sum(axis=1)).max() > 1e-6


def test_sum_to_zero_basis_is_orthonormal() -> None:
    q = sum_to_zero_basis(6)
    np.testing.assert_allclose(q.T @ q, np.eye(5), atol=1e-12)
    np.testing.assert_allclose(q.sum(axis=0), 0.0, atol=1e-12)


def test_missing_unmasked_cell_is_rejected(grid) -> None:
    theta = grid.theta.copy()
    theta[1, 4, 2] = np.nan
    with pytest.raises(IncompleteGridError, match=r"\(Politics, 4, 2\)"):
        BayesModel(grid.with_theta(theta))
    mask = ~np.isnan(theta)
    assert BayesModel(grid.with_theta(theta), cell_mask=mask).mask.sum() == 107


def test_rejects_unknown_fixed_scale(grid) -> None:
    with pytest.raises(ValueError, match="Unknown fixed scales"):
        BayesModel(grid, BayesModelSpec(fixed_scales={"tau": 1.0}))


def test_rejects_wrong_size_count(grid) -> None:
    with pytest.raises(ValueError, match="representative sizes"):
        BayesModel(grid, BayesModelSpec(representative_log_size=(0.0, 1.0)))


def test_checked_entry_point(grid) -> None:
    model = BayesModel(grid)
    u = np.zeros(model.dim)
    u[0] = np.nan
    with pytest.raises(SamplerError):
        model.log_posterior_and_gradient(u)
    with pytest.raises(ValueError, match="coordinates"):
        model.log_posterior_and_gradient(np.zeros(3))


def test_single_cell_mask() -> None:
    mask = single_cell_mask((2, 9, 4), (1, 3, 0))
    assert mask.sum() == 1
    assert mask[1, 3, 0]
