"""Builders of small synthetic inputs shared by the test packages."""

import numpy as np
from scipy.special import expit, logit

from src.common.grid import CellData, CellKey

CLOSE_MS = 1_767_225_600_000
HOUR_MS = 3_600_000


def simulate_cell(
    theta: float,
    n: int,
    seed: int,
    key: CellKey = CellKey("Sports", 0, 0),
    intercept: float = 0.0,
    counts: tuple[int, int] = (1, 1),
    n_markets: int | None = None,
) -> CellData:
    """
    Prices uniform on 5-95 cents, outcomes drawn from σ(intercept + θ·logit p).
    With `n_markets`, trades share their market's outcome and price level.
    """
    rng = np.random.default_rng(seed)
    if n_markets is None:
        price = rng.integers(5, 96, size=n)
        outcome = (rng.uniform(size=n) < expit(intercept + theta * logit(price / 100))).astype(int)
        market_id = np.array([f"m{i}" for i in range(n)], dtype=object)
    else:
        market_price = rng.integers(5, 96, size=n_markets)
        market_outcome = (
            rng.uniform(size=n_markets) < expit(intercept + theta * logit(market_price / 100))
        ).astype(int)
        market = rng.integers(0, n_markets, size=n)
        price = np.clip(market_price[market] + rng.integers(-1, 2, size=n), 1, 99)
        outcome = market_outcome[market]
        market_id = np.array([f"m{m}" for m in market], dtype=object)
    lo, hi = counts
    return CellData.from_arrays(
        key,
        price=price,
        outcome=outcome,
        contract_count=rng.integers(lo, hi + 1, size=n),
        market_id=market_id,
    )


def trade_row(market_id: str, price: int, hours_before_close: float, count: int = 1) -> dict:
    return {
        "market_id": market_id,
        "price_cents": str(price),
        "count": str(count),
        "side": "yes",
        "timestamp_ms": str(CLOSE_MS - int(hours_before_close * HOUR_MS)),
    }


def market_row(market_id: str, ticker: str, outcome: str = "yes", title: str = "") -> dict:
    return {
        "market_id": market_id,
        "event_ticker": ticker,
        "title": title or f"Market {market_id}",
        "close_time_ms": str(CLOSE_MS),
        "outcome": outcome,
    }
