"""Hierarchical slope model with a non-centred parameterisation.

    θ(d, τ, s) ~ Normal(μ(τ) + α_d + β_d(τ) + δ_d·s̃_s, σ²)
    μ(τ) ~ Normal(1, 0.5²)
    α = σ_α·Q_D·a,  a ~ Normal(0, I)          (Σ_d α_d = 0)
    β = σ_β·Q_D·B·Q_Tᵀ,  B ~ Normal(0, I)     (rows and columns sum to zero)
    δ_d = σ_δ·r_d,  r ~ Normal(0, I)
    σ_α, σ_β, σ_δ, σ ~ HalfCauchy(0, 1), sampled on the log scale

Q_k is an orthonormal basis of the sum-to-zero subspace of R^k.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.common.grid import SlopeGrid
from src.constants import DEFAULT_REPRESENTATIVE_LOG_SIZE, BetaConstraint
from src.errors import IncompleteGridError, SamplerError

SCALE_NAMES = ("sigma_alpha", "sigma_beta", "sigma_delta", "sigma")
_LOG_2PI = math.log(2.0 * math.pi)


def sum_to_zero_basis(levels: int) -> np.ndarray:
    """(levels × levels−1) Helmert basis: orthonormal columns orthogonal to the ones vector."""
    basis = np.zeros((levels, levels - 1))
    for j in range(1, levels):
        norm = math.sqrt(j * (j + 1))
        basis[:j, j - 1] = 1.0 / norm
        basis[j, j - 1] = -j / norm
    return basis


@dataclass(frozen=True)
class BayesModelSpec:
    mu_prior_mean: float = 1.0
    mu_prior_sd: float = 0.5
    hyperprior_scale: float = 1.0
    representative_log_size: tuple[float, ...] = DEFAULT_REPRESENTATIVE_LOG_SIZE
    beta_constraint: BetaConstraint = BetaConstraint.DOUBLE
    # scales held at a fixed value are removed from the parameter vector
    fixed_scales: Mapping[str, float] = field(default_factory=dict)

    @property
    def centred_log_sizes(self) -> np.ndarray:
        sizes = np.asarray(self.representative_log_size, dtype=np.float64)
        return sizes - sizes.mean()


@dataclass(frozen=True)
class ParameterLayout:
    """Positions of every unconstrained coordinate."""

    n_domains: int
    n_horizon: int
    beta_constraint: BetaConstraint
    free_scales: tuple[str, ...]

    @property
    def beta_shape(self) -> tuple[int, int]:
        if self.beta_constraint == BetaConstraint.DOUBLE:
            return (self.n_domains - 1, self.n_horizon - 1)
        return (self.n_domains - 1, self.n_horizon)

    @property
    def sizes(self) -> dict[str, int]:
        rows, cols = self.beta_shape
        sizes = {
            "mu": self.n_horizon,
            "alpha_raw": self.n_domains - 1,
            "beta_raw": rows * cols,
            "delta_raw": self.n_domains,
        }
        sizes.update({f"log_{name}": 1 for name in self.free_scales})
        return sizes

    @property
    def slices(self) -> dict[str, slice]:
        out = {}
        start = 0
        for name, size in self.sizes.items():
            out[name] = slice(start, start + size)
            start += size
        return out

    @property
    def dim(self) -> int:
        return sum(self.sizes.values())


@dataclass(frozen=True)
class ConstrainedParams:
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    scales: dict[str, float]

    def cell_means(self, centred_log_sizes: np.ndarray) -> np.ndarray:
        return (
            self.mu[None, :, None]
            + self.alpha[:, None, None]
            + self.beta[:, :, None]
            + self.delta[:, None, None] * centred_log_sizes[None, None, :]
        )


class BayesModel:
    """Log posterior, gradient and constraining transform over one slope grid."""

    def __init__(
        self,
        grid: SlopeGrid,
        spec: BayesModelSpec | None = None,
        cell_mask: np.ndarray | None = None,
    ):
        self.spec = spec or BayesModelSpec()
        self.domains = grid.domains
        self.theta = np.asarray(grid.theta, dtype=np.float64)
        n_domains, n_horizon, n_size = self.theta.shape
        self.s_tilde = self.spec.centred_log_sizes
        if self.s_tilde.size != n_size:
            raise ValueError(
                f"{self.s_tilde.size} representative sizes for {n_size} size bins"
            )
        unknown = set(self.spec.fixed_scales) - set(SCALE_NAMES)
        if unknown:
            raise ValueError(f"Unknown fixed scales {sorted(unknown)}")
        self.mask = (
            np.ones(self.theta.shape, dtype=bool)
            if cell_mask is None
            else np.asarray(cell_mask, dtype=bool)
        )
        missing = np.isnan(self.theta) & self.mask
        if np.any(missing):
            raise IncompleteGridError(
                [
                    (self.domains[d], int(t), int(s))
                    for d, t, s in np.argwhere(missing)
                ]
            )
        self.theta_masked = np.where(self.mask, self.theta, 0.0)
        self.layout = ParameterLayout(
            n_domains,
            n_horizon,
            self.spec.beta_constraint,
            tuple(n for n in SCALE_NAMES if n not in self.spec.fixed_scales),
        )
        self.q_domain = sum_to_zero_basis(n_domains)
        self.q_horizon = sum_to_zero_basis(n_horizon)

    @property
    def dim(self) -> int:
        return self.layout.dim

    # transforms

    def _scales(self, u: np.ndarray) -> dict[str, float]:
        slices = self.layout.slices
        scales = dict(self.spec.fixed_scales)
        for name in self.layout.free_scales:
            scales[name] = math.exp(float(u[slices[f"log_{name}"]][0]))
        return scales

    def _beta_unit(self, beta_raw: np.ndarray) -> np.ndarray:
        raw = beta_raw.reshape(self.layout.beta_shape)
        if self.layout.beta_constraint == BetaConstraint.DOUBLE:
            return self.q_domain @ raw @ self.q_horizon.T
        return self.q_domain @ raw

    def constrain(self, u: np.ndarray) -> ConstrainedParams:
        sl = self.layout.slices
        scales = self._scales(u)
        return ConstrainedParams(
            mu=u[sl["mu"]].copy(),
            alpha=scales["sigma_alpha"] * (self.q_domain @ u[sl["alpha_raw"]]),
            beta=scales["sigma_beta"] * self._beta_unit(u[sl["beta_raw"]]),
            delta=scales["sigma_delta"] * u[sl["delta_raw"]],
            scales=scales,
        )

    def parameter_names(self) -> list[str]:
        n_horizon = self.layout.n_horizon
        names = [f"mu[{t}]" for t in range(n_horizon)]
        names += [f"alpha[{d}]" for d in self.domains]
        names += [f"beta[{d},{t}]" for d in self.domains for t in range(n_horizon)]
        names += [f"delta[{d}]" for d in self.domains]
        names += list(SCALE_NAMES)
        return names

    def constrained_vector(self, u: np.ndarray) -> np.ndarray:
        p = self.constrain(u)
        return np.concatenate(
            [
                p.mu,
                p.alpha,
                p.beta.ravel(),
                p.delta,
                [p.scales[name] for name in SCALE_NAMES],
            ]
        )

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-0.5, 0.5, size=self.dim)

    # density

    def logp_and_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        """Log joint density (up to nothing: all constants kept) and its gradient."""
        u = np.asarray(u, dtype=np.float64)
        sl = self.layout.slices
        spec = self.spec
        params = self.constrain(u)
        sigma = params.scales["sigma"]
        grad = np.zeros_like(u)

        # likelihood
        resid = (self.theta_masked - params.cell_means(self.s_tilde)) / sigma
        resid = np.where(self.mask, resid, 0.0)
        n_obs = int(self.mask.sum())
        logp = -0.5 * float(np.sum(resid * resid)) - n_obs * (
            math.log(sigma) + 0.5 * _LOG_2PI
        )
        g = resid / sigma  # d logp / d cell mean
        g_mu = g.sum(axis=(0, 2))
        g_alpha = g.sum(axis=(1, 2))
        g_beta = g.sum(axis=2)
        g_delta = (g * self.s_tilde[None, None, :]).sum(axis=(1, 2))

        grad[sl["mu"]] += g_mu
        grad[sl["alpha_raw"]] += params.scales["sigma_alpha"] * (self.q_domain.T @ g_alpha)
        if self.layout.beta_constraint == BetaConstraint.DOUBLE:
            g_beta_raw = self.q_domain.T @ g_beta @ self.q_horizon
        else:
            g_beta_raw = self.q_domain.T @ g_beta
        grad[sl["beta_raw"]] += params.scales["sigma_beta"] * g_beta_raw.ravel()
        grad[sl["delta_raw"]] += params.scales["sigma_delta"] * g_delta

        scale_grads = {
            "sigma_alpha": float(g_alpha @ params.alpha),
            "sigma_beta": float(np.sum(g_beta * params.beta)),
            "sigma_delta": float(g_delta @ params.delta),
            "sigma": float(np.sum(resid * resid)) - n_obs,
        }

        # priors
        mu = u[sl["mu"]]
        z = (mu - spec.mu_prior_mean) / spec.mu_prior_sd
        logp += float(
            -0.5 * np.sum(z * z)
            - mu.size * (math.log(spec.mu_prior_sd) + 0.5 * _LOG_2PI)
        )
        grad[sl["mu"]] -= z / spec.mu_prior_sd
        for name in ("alpha_raw", "beta_raw", "delta_raw"):
            raw = u[sl[name]]
            logp += float(-0.5 * np.sum(raw * raw) - raw.size * 0.5 * _LOG_2PI)
            grad[sl[name]] -= raw

        # half-Cauchy on each free scale, with the log-transform Jacobian
        scale2 = spec.hyperprior_scale**2
        for name in self.layout.free_scales:
            index = sl[f"log_{name}"].start
            log_scale = float(u[index])
            value2 = math.exp(2.0 * log_scale)
            logp += (
                math.log(2.0 / (math.pi * spec.hyperprior_scale))
                - math.log1p(value2 / scale2)
                + log_scale
            )
            grad[index] += scale_grads[name] + 1.0 - 2.0 * value2 / (scale2 + value2)
        return logp, grad

    def log_posterior_and_gradient(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        """Checked entry point: non-finite coordinates raise SamplerError."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.dim,):
            raise ValueError(f"Expected {self.dim} coordinates, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise SamplerError("Non-finite parameter coordinates")
        return self.logp_and_grad(u)


def single_cell_mask(shape: Sequence[int], cell: tuple[int, int, int]) -> np.ndarray:
    mask = np.zeros(tuple(shape), dtype=bool)
    mask[cell] = True
    return mask
