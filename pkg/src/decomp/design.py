"""Sum-to-zero (effect) coded design matrices over the complete (d, τ, s) grid.

Cells are ordered d-major, then τ, then s, matching `theta.ravel()`.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from src.constants import Component
from src.errors import StructuralError

# terms whose presence makes another term marginal (hierarchy of the model)
CONTAINS: dict[Component, frozenset[Component]] = {
    Component.MU: frozenset({Component.BETA, Component.SIZE_HORIZON}),
    Component.ALPHA: frozenset({Component.BETA, Component.GAMMA}),
    Component.BETA: frozenset(),
    Component.GAMMA: frozenset(),
    Component.SIZE_HORIZON: frozenset(),
}


def effect_coding(levels: int) -> np.ndarray:
    """(levels × levels−1) contrast matrix whose columns sum to zero."""
    if levels < 2:
        return np.zeros((levels, 0))
    coding = np.zeros((levels, levels - 1))
    coding[: levels - 1] = np.eye(levels - 1)
    coding[levels - 1] = -1.0
    return coding


@dataclass(frozen=True)
class GridDesign:
    """Column blocks of the constrained-basis linear model for one grid shape."""

    n_domains: int
    n_horizon: int
    n_size: int
    blocks: dict[Component, np.ndarray]

    @property
    def n_cells(self) -> int:
        return self.n_domains * self.n_horizon * self.n_size

    def df(self, component: Component) -> int:
        return self.blocks[component].shape[1]

    def matrix(self, terms: Iterable[Component]) -> np.ndarray:
        """Intercept followed by the blocks of `terms` in the given order."""
        columns = [np.ones((self.n_cells, 1))]
        columns.extend(self.blocks[term] for term in terms)
        return np.hstack(columns)

    def slices(self, terms: Iterable[Component]) -> dict[Component, slice]:
        out: dict[Component, slice] = {}
        start = 1
        for term in terms:
            width = self.df(term)
            out[term] = slice(start, start + width)
            start += width
        return out


def build_design(n_domains: int, n_horizon: int, n_size: int) -> GridDesign:
    cd = effect_coding(n_domains)
    ct = effect_coding(n_horizon)
    cs = effect_coding(n_size)
    eye_d = np.eye(n_domains)
    rows: dict[Component, list[np.ndarray]] = {c: [] for c in Component}
    for d in range(n_domains):
        for t in range(n_horizon):
            for s in range(n_size):
                rows[Component.MU].append(ct[t])
                rows[Component.ALPHA].append(cd[d])
                rows[Component.BETA].append(np.kron(cd[d], ct[t]))
                rows[Component.GAMMA].append(np.kron(eye_d[d], cs[s]))
                rows[Component.SIZE_HORIZON].append(np.kron(ct[t], cs[s]))
    blocks = {c: np.vstack(r) for c, r in rows.items()}
    return GridDesign(n_domains, n_horizon, n_size, blocks)


@dataclass(frozen=True)
class LeastSquaresFit:
    coefficients: np.ndarray
    fitted: np.ndarray
    rss: float
    rank: int
    n_params: int


def solve_least_squares(
    design: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None
) -> LeastSquaresFit:
    """(Weighted) least squares; a rank-deficient design raises StructuralError."""
    w = np.ones_like(y) if weights is None else weights
    root_w = np.sqrt(w)
    scaled = design * root_w[:, None]
    rank = int(np.linalg.matrix_rank(scaled))
    if rank < design.shape[1]:
        raise StructuralError(
            f"Design matrix is rank deficient: rank {rank} < {design.shape[1]} columns"
        )
    coefficients, *_ = np.linalg.lstsq(scaled, y * root_w, rcond=None)
    fitted = design @ coefficients
    resid = y - fitted
    return LeastSquaresFit(
        coefficients=coefficients,
        fitted=fitted,
        rss=float(np.sum(w * resid * resid)),
        rank=rank,
        n_params=design.shape[1],
    )
