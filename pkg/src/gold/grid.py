"""Gold layer: filtered, classified and binned trades grouped into analysis cells.

Filter order:
1. keep valid rows; trades on unknown market ids go to the ledger
2. keep resolved markets (outcome yes/no)
3. drop markets below `min_trades_per_market` (counted before the price filter)
4. price filter on integer cents, both endpoints inclusive
5. horizon computation; negative horizons dropped or rejected
6. binning and the optional reliable-horizon mask
7. drop cells below `min_trades_per_cell`
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import polars as pl

from das.logger import log_info, log_warn
from src.common.grid import CellData, CellKey
from src.common.models import Market, Observation, Trade, market_records
from src.config import BinningConfig, FilterConfig
from src.constants import Outcome
from src.errors import NegativeHorizonError
from src.silver.binning import with_bins
from src.silver.classification import DomainRuleSet, classify_markets
from src.silver.ledger import ErrorLedger
from src.silver.models.validation import VALIDATION_ERRORS

CELL_COLUMNS = ["domain", "horizon_bin", "size_bin"]
SORT_COLUMNS = [*CELL_COLUMNS, "market_id", "timestamp", "price", "contract_count"]


def _valid(df: pl.DataFrame) -> pl.DataFrame:
    return df.filter(pl.col(VALIDATION_ERRORS).list.len() == 0)


def _concat_shards(trades: Trade | Sequence[Trade]) -> pl.DataFrame:
    shards = [trades] if isinstance(trades, (Trade, pl.DataFrame)) else list(trades)
    if not shards:
        return Trade.empty().with_columns(pl.lit(0).alias("shard"))
    return pl.concat(
        [
            _valid(shard).with_columns(pl.lit(i, dtype=pl.Int64).alias("shard"))
            for i, shard in enumerate(shards)
        ]
    )


def classified_markets(markets: Market, rules: DomainRuleSet) -> pl.DataFrame:
    """Valid markets with their domain label."""
    labels = classify_markets(market_records(markets), rules)
    return (
        _valid(markets)
        .select(Market.market_id, Market.close_time, Market.outcome)
        .join(labels, on="market_id", how="left")
    )


def assemble_observations(
    trades: Trade | Sequence[Trade],
    markets: Market,
    rules: DomainRuleSet,
    bins: BinningConfig,
    filt: FilterConfig,
    ledger: ErrorLedger | None = None,
) -> Observation:
    """Filtered and binned observations, sorted canonically."""
    ledger = ledger if ledger is not None else ErrorLedger()
    market_df = classified_markets(markets, rules)
    joined = _concat_shards(trades).join(market_df, on="market_id", how="left")

    unknown = joined.filter(pl.col("outcome").is_null())
    for row in unknown.select("shard", "line").iter_rows(named=True):
        ledger.add(f"trades[{row['shard']}]", row["line"], "unknown_market_id")
    if unknown.height:
        log_warn(f"{unknown.height} trades reference unknown market ids")

    resolved = joined.filter(
        pl.col("outcome").is_in([Outcome.YES.value, Outcome.NO.value])
    )
    active = resolved.filter(
        pl.len().over("market_id") >= filt.min_trades_per_market
    )
    priced = active.filter(
        pl.col("price").is_between(filt.price_min, filt.price_max, closed="both")
    )
    log_info(
        f"{joined.height} valid trades, {resolved.height} on resolved markets, "
        f"{active.height} after market minimum, {priced.height} after price filter"
    )

    binned = with_bins(priced.lazy(), bins).collect()
    negative = binned.filter(pl.col("horizon_hours") < 0)
    if negative.height:
        if not filt.drop_negative_horizon:
            first = negative.row(0, named=True)
            raise NegativeHorizonError(
                f"{negative.height} trades executed after market close "
                f"(first: market {first['market_id']}, line {first['line']})"
            )
        log_warn(f"{negative.height} trades after market close dropped")
        binned = binned.filter(pl.col("horizon_hours") >= 0)

    if filt.reliable_horizon_mask is not None:
        binned = binned.filter(pl.col("horizon_bin").is_in(filt.reliable_horizon_mask))

    kept = binned.filter(pl.len().over(CELL_COLUMNS) >= filt.min_trades_per_cell)
    observations = (
        kept.select(
            pl.col("domain"),
            pl.col("horizon_bin"),
            pl.col("size_bin"),
            pl.col("market_id"),
            pl.col("price"),
            (pl.col("outcome") == Outcome.YES.value).cast(pl.Int64).alias("outcome"),
            pl.col("count").alias("contract_count"),
            pl.col("horizon_hours"),
            pl.col("timestamp"),
        )
        .sort(SORT_COLUMNS)
    )
    log_info(
        f"{observations.height} observations in "
        f"{observations.select(CELL_COLUMNS).n_unique() if observations.height else 0} cells"
    )
    return Observation.from_df(Observation.select_columns(observations), validate=False)


def cells_from_observations(observations: pl.DataFrame) -> dict[CellKey, CellData]:
    """Group canonically sorted observations into cells, keyed in CellKey order."""
    cells: dict[CellKey, CellData] = {}
    if observations.height == 0:
        return cells
    parts = observations.sort(SORT_COLUMNS).partition_by(
        CELL_COLUMNS, as_dict=True, maintain_order=True
    )
    for (domain, horizon_bin, size_bin), part in sorted(parts.items()):
        key = CellKey(domain, int(horizon_bin), int(size_bin))
        cells[key] = cell_from_frame(part, key)
    return cells


def cell_from_frame(observations: pl.DataFrame, key: CellKey) -> CellData:
    return CellData.from_arrays(
        key,
        price=observations["price"].to_numpy(),
        outcome=observations["outcome"].to_numpy(),
        contract_count=observations["contract_count"].to_numpy(),
        market_id=np.asarray(observations["market_id"].to_list(), dtype=object),
        horizon_hours=observations["horizon_hours"].cast(pl.Float64).to_numpy(),
    )


def groups_from_frame(
    observations: pl.DataFrame, column: str
) -> dict[str, CellData]:
    """Pool observations by the values of `column` (e.g. a subgroup label)."""
    groups: dict[str, CellData] = {}
    ordered = observations.sort([column, *SORT_COLUMNS])
    parts = ordered.partition_by(column, as_dict=True, maintain_order=True)
    for (label,), part in parts.items():
        if label is None:
            continue
        key = CellKey(str(label), -1, -1)
        groups[str(label)] = cell_from_frame(part, key)
    return groups


def assemble_grid(
    trades: Trade | Sequence[Trade],
    markets: Market,
    rules: DomainRuleSet,
    bins: BinningConfig,
    filt: FilterConfig,
    ledger: ErrorLedger | None = None,
) -> dict[CellKey, CellData]:
    """Map of every retained cell to its observations."""
    return cells_from_observations(
        assemble_observations(trades, markets, rules, bins, filt, ledger)
    )


def with_labels(
    observations: pl.DataFrame,
    markets: Market,
    rules: DomainRuleSet,
    column: str = "label",
) -> pl.DataFrame:
    """Attach a second classification (e.g. subcategories) to every observation."""
    labels = classify_markets(market_records(markets), rules, column=column)
    return observations.join(labels, on="market_id", how="left")
