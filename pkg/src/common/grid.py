"""Analysis grid containers: cell keys, per-cell observations and the slope grid."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.constants import WeightScheme
from src.errors import IncompleteGridError, MissingCellError


@dataclass(frozen=True, order=True, slots=True)
class CellKey:
    domain: str
    horizon_bin: int
    size_bin: int


@dataclass(frozen=True)
class CellData:
    """Observations of one cell, as parallel arrays in a canonical (sorted) order."""

    key: CellKey
    price: np.ndarray  # int cents
    outcome: np.ndarray  # 0/1
    contract_count: np.ndarray
    market_id: np.ndarray  # object array of str
    horizon_hours: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        if self.horizon_hours.size == 0 and self.price.size:
            object.__setattr__(self, "horizon_hours", np.full(self.price.size, np.nan))

    @property
    def n(self) -> int:
        return int(self.price.size)

    @property
    def price_fraction(self) -> np.ndarray:
        return self.price / 100.0

    def weights(self, scheme: WeightScheme) -> np.ndarray:
        if scheme == WeightScheme.CONTRACT:
            return self.contract_count.astype(np.float64)
        return np.ones(self.n, dtype=np.float64)

    def take(self, index: np.ndarray) -> CellData:
        return CellData(
            key=self.key,
            price=self.price[index],
            outcome=self.outcome[index],
            contract_count=self.contract_count[index],
            market_id=self.market_id[index],
            horizon_hours=self.horizon_hours[index],
        )

    @classmethod
    def from_arrays(
        cls,
        key: CellKey,
        price: Sequence[int] | np.ndarray,
        outcome: Sequence[int] | np.ndarray,
        contract_count: Sequence[int] | np.ndarray | None = None,
        market_id: Sequence[str] | np.ndarray | None = None,
        horizon_hours: Sequence[float] | np.ndarray | None = None,
    ) -> CellData:
        price = np.asarray(price, dtype=np.int64)
        n = price.size
        return cls(
            key=key,
            price=price,
            outcome=np.asarray(outcome, dtype=np.int8),
            contract_count=(
                np.ones(n, dtype=np.int64)
                if contract_count is None
                else np.asarray(contract_count, dtype=np.int64)
            ),
            market_id=(
                np.array([f"m{i}" for i in range(n)], dtype=object)
                if market_id is None
                else np.asarray(market_id, dtype=object)
            ),
            horizon_hours=(
                np.full(n, np.nan)
                if horizon_hours is None
                else np.asarray(horizon_hours, dtype=np.float64)
            ),
        )


def pool_cells(cells: Iterable[CellData], key: CellKey | None = None) -> CellData:
    """Concatenate observations of several cells into one pool."""
    cells = list(cells)
    if not cells:
        raise ValueError("Cannot pool an empty collection of cells")
    return CellData(
        key=key or cells[0].key,
        price=np.concatenate([c.price for c in cells]),
        outcome=np.concatenate([c.outcome for c in cells]),
        contract_count=np.concatenate([c.contract_count for c in cells]),
        market_id=np.concatenate([c.market_id for c in cells]),
        horizon_hours=np.concatenate([c.horizon_hours for c in cells]),
    )


@dataclass(frozen=True)
class SlopeGrid:
    """
    Fitted slopes θ(d, τ, s) with standard errors and sample sizes.

    Arrays have shape (D, T, S); absent cells hold NaN slopes.
    """

    domains: tuple[str, ...]
    theta: np.ndarray
    se: np.ndarray
    n: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.theta.shape  # type: ignore[return-value]

    @property
    def n_domains(self) -> int:
        return self.theta.shape[0]

    @property
    def n_horizon(self) -> int:
        return self.theta.shape[1]

    @property
    def n_size(self) -> int:
        return self.theta.shape[2]

    def domain_index(self, domain: str) -> int:
        try:
            return self.domains.index(domain)
        except ValueError as exc:
            raise MissingCellError(f"Domain {domain!r} is not in the grid") from exc

    def missing_cells(self) -> list[tuple[str, int, int]]:
        d_idx, t_idx, s_idx = np.nonzero(np.isnan(self.theta))
        return [
            (self.domains[d], int(t), int(s))
            for d, t, s in zip(d_idx, t_idx, s_idx, strict=True)
        ]

    def require_complete(self) -> SlopeGrid:
        missing = self.missing_cells()
        if missing:
            raise IncompleteGridError(missing)
        return self

    def value(self, domain: str, horizon_bin: int, size_bin: int) -> float:
        value = self.theta[self.domain_index(domain), horizon_bin, size_bin]
        if np.isnan(value):
            raise MissingCellError(
                f"Missing cell ({domain}, {horizon_bin}, {size_bin})"
            )
        return float(value)

    def with_theta(self, theta: np.ndarray) -> SlopeGrid:
        return SlopeGrid(self.domains, np.asarray(theta, dtype=np.float64), self.se, self.n)

    def permute_domains(self, order: Sequence[int]) -> SlopeGrid:
        order = list(order)
        return SlopeGrid(
            tuple(self.domains[i] for i in order),
            self.theta[order],
            self.se[order],
            self.n[order],
        )

    def keys(self) -> list[CellKey]:
        return [
            CellKey(d, t, s)
            for d in self.domains
            for t in range(self.n_horizon)
            for s in range(self.n_size)
        ]

    @classmethod
    def from_values(
        cls,
        domains: Sequence[str],
        theta: np.ndarray,
        se: np.ndarray | float = 0.05,
        n: np.ndarray | int = 1000,
    ) -> SlopeGrid:
        theta = np.asarray(theta, dtype=np.float64)
        return cls(
            tuple(domains),
            theta,
            np.broadcast_to(np.asarray(se, dtype=np.float64), theta.shape).copy(),
            np.broadcast_to(np.asarray(n, dtype=np.int64), theta.shape).copy(),
        )

    @classmethod
    def from_entries(
        cls,
        entries: Mapping[CellKey, tuple[float, float, int]],
        domains: Sequence[str] | None = None,
        n_horizon: int = 9,
        n_size: int = 4,
    ) -> SlopeGrid:
        """Build from `{CellKey: (theta, se, n)}`; domains default to sorted labels present."""
        if domains is None:
            domains = sorted({key.domain for key in entries})
        domains = tuple(domains)
        shape = (len(domains), n_horizon, n_size)
        theta = np.full(shape, np.nan)
        se = np.full(shape, np.nan)
        n = np.zeros(shape, dtype=np.int64)
        index = {d: i for i, d in enumerate(domains)}
        for key, (value, std_err, count) in entries.items():
            if key.domain not in index:
                continue
            at = (index[key.domain], key.horizon_bin, key.size_bin)
            theta[at] = value
            se[at] = std_err
            n[at] = count
        return cls(domains, theta, se, n)
