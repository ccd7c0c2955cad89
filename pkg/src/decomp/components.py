"""Additive decomposition θ(d, τ, s) = μ(τ) + α_d + β_d(τ) + γ_d(s) + ε."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.common.grid import SlopeGrid


@dataclass(frozen=True)
class ComponentSet:
    """
    Sum-to-zero identified components over D domains, T horizon and S size bins.

    Constraints: Σ_d α_d = 0; Σ_d β_d(τ) = 0 for every τ (and Σ_τ β_d(τ) = 0 when
    doubly centred); Σ_s γ_d(s) = 0 for every d.
    """

    domains: tuple[str, ...]
    mu: np.ndarray  # (T,)
    alpha: np.ndarray  # (D,)
    beta: np.ndarray  # (D, T)
    gamma: np.ndarray  # (D, S)
    residual: np.ndarray  # (D, T, S)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.alpha.size, self.mu.size, self.gamma.shape[1])

    def fitted(self) -> np.ndarray:
        return (
            self.mu[None, :, None]
            + self.alpha[:, None, None]
            + self.beta[:, :, None]
            + self.gamma[:, None, :]
        )

    def predict(self) -> np.ndarray:
        """Observed grid implied by the components: fitted plus residual."""
        return self.fitted() + self.residual

    def constraint_violations(self) -> dict[str, float]:
        return {
            "alpha": float(abs(self.alpha.sum())),
            "beta_domains": float(np.max(np.abs(self.beta.sum(axis=0)))),
            "beta_horizons": float(np.max(np.abs(self.beta.sum(axis=1)))),
            "gamma_sizes": float(np.max(np.abs(self.gamma.sum(axis=1)))),
        }

    def check_constraints(self, atol: float = 1e-10, doubly_centred: bool = True) -> bool:
        violations = self.constraint_violations()
        if not doubly_centred:
            violations.pop("beta_horizons")
        return all(v <= atol for v in violations.values())

    def to_grid(self, se: float | np.ndarray = 0.05, n: int | np.ndarray = 1000) -> SlopeGrid:
        return SlopeGrid.from_values(self.domains, self.predict(), se=se, n=n)

    def permute_domains(self, order: Sequence[int]) -> ComponentSet:
        order = list(order)
        return ComponentSet(
            tuple(self.domains[i] for i in order),
            self.mu,
            self.alpha[order],
            self.beta[order],
            self.gamma[order],
            self.residual[order],
        )

    @classmethod
    def without_residual(
        cls,
        domains: Sequence[str],
        mu: np.ndarray,
        alpha: np.ndarray,
        beta: np.ndarray,
        gamma: np.ndarray,
    ) -> ComponentSet:
        mu, alpha, beta, gamma = (
            np.asarray(v, dtype=np.float64) for v in (mu, alpha, beta, gamma)
        )
        residual = np.zeros((alpha.size, mu.size, gamma.shape[1]))
        return cls(tuple(domains), mu, alpha, beta, gamma, residual)

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        domains: Sequence[str],
        n_horizon: int = 9,
        n_size: int = 4,
        mu_mean: float = 1.2,
        scale: float = 0.2,
    ) -> ComponentSet:
        """A constraint-satisfying set (β doubly centred) with zero residual."""
        n_domains = len(domains)
        mu = mu_mean + scale * rng.standard_normal(n_horizon)
        alpha = scale * rng.standard_normal(n_domains)
        alpha -= alpha.mean()
        beta = scale * rng.standard_normal((n_domains, n_horizon))
        beta -= beta.mean(axis=0, keepdims=True)
        beta -= beta.mean(axis=1, keepdims=True)
        gamma = scale * rng.standard_normal((n_domains, n_size))
        gamma -= gamma.mean(axis=1, keepdims=True)
        return cls.without_residual(domains, mu, alpha, beta, gamma)
