"""Typed frames and record types for trades, markets and binned observations.

Layer concepts:
- bronze: raw files read as strings, plus the 1-based source `line`
- silver sources: strings parsed to typed columns, raw values kept for validation
- silver models: typed columns plus `validation_errors` (empty list = valid row)
- gold: binned observations ready to be grouped into analysis cells
"""

from dataclasses import dataclass

from das.engine.polars.typed_dataframe import Col, TypedDataFrame
from src.constants import Outcome, Side


@dataclass(frozen=True, slots=True)
class TradeRecord:
    """One executed trade; `price` in integer cents."""

    market_id: str
    price: int
    count: int
    side: Side
    timestamp: int

    @property
    def price_fraction(self) -> float:
        return self.price / 100


@dataclass(frozen=True, slots=True)
class MarketRecord:
    """One binary contract and its resolution."""

    market_id: str
    event_ticker: str
    title: str
    close_time: int
    outcome: Outcome

    @property
    def y(self) -> int:
        return 1 if self.outcome == Outcome.YES else 0


class Trade(TypedDataFrame):
    """Trade model schema - validated rows of a trades file."""

    line: Col[int]
    market_id: Col[str | None]
    price: Col[int | None]
    count: Col[int | None]
    side: Col[str | None]
    timestamp: Col[int | None]
    validation_errors: Col[list[str]]


class Market(TypedDataFrame):
    """Market model schema - validated rows of a markets file."""

    line: Col[int]
    market_id: Col[str | None]
    event_ticker: Col[str | None]
    title: Col[str | None]
    close_time: Col[int | None]
    outcome: Col[str | None]
    validation_errors: Col[list[str]]


class Observation(TypedDataFrame):
    """Gold observation schema - one filtered trade placed in its analysis cell."""

    domain: Col[str]
    horizon_bin: Col[int]
    size_bin: Col[int]
    market_id: Col[str]
    price: Col[int]
    outcome: Col[int]
    contract_count: Col[int]
    horizon_hours: Col[float]
    timestamp: Col[int]


def trade_records(trades: Trade) -> list[TradeRecord]:
    """Valid rows of a trade frame as records, in row order."""
    return [
        TradeRecord(
            market_id=row["market_id"],
            price=row["price"],
            count=row["count"],
            side=Side(row["side"]),
            timestamp=row["timestamp"],
        )
        for row in trades.iter_rows(named=True)
        if not row["validation_errors"]
    ]


def market_records(markets: Market) -> list[MarketRecord]:
    """Valid rows of a market frame as records, in row order."""
    return [
        MarketRecord(
            market_id=row["market_id"],
            event_ticker=row["event_ticker"] or "",
            title=row["title"] or "",
            close_time=row["close_time"],
            outcome=Outcome(row["outcome"]),
        )
        for row in markets.iter_rows(named=True)
        if not row["validation_errors"]
    ]
