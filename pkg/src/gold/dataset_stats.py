"""Per-domain dataset summary computed in DuckDB over the validated frames."""

from __future__ import annotations

import polars as pl

from src.common.models import Market, Trade, market_records
from src.db import query_frame
from src.silver.classification import DomainRuleSet, classify_markets
from src.silver.models.validation import VALIDATION_ERRORS

DATASET_STATS_SQL = """
WITH per_market AS (
    SELECT
        m.market_id,
        d.domain,
        m.outcome,
        COUNT(t.market_id) AS trades,
        COALESCE(SUM(t.contract_count), 0) AS contracts
    FROM markets AS m
    JOIN market_domains AS d USING (market_id)
    LEFT JOIN trades AS t USING (market_id)
    GROUP BY m.market_id, d.domain, m.outcome
),
per_domain AS (
    SELECT
        domain,
        COUNT(*) AS markets,
        SUM(trades) AS trades,
        SUM(contracts) AS contracts,
        SUM(CASE WHEN outcome IN ('yes', 'no') THEN 1 ELSE 0 END) AS resolved,
        SUM(CASE WHEN outcome = 'yes' THEN 1 ELSE 0 END) AS yes_markets,
        MEDIAN(trades) AS median_volume
    FROM per_market
    GROUP BY domain
)
SELECT
    l.domain,
    l.position,
    COALESCE(p.markets, 0) AS markets,
    COALESCE(p.trades, 0) AS trades,
    COALESCE(p.contracts, 0) AS contracts,
    CASE WHEN COALESCE(p.markets, 0) = 0 THEN 0.0
         ELSE 100.0 * p.resolved / p.markets END AS resolved_pct,
    COALESCE(p.median_volume, 0.0) AS median_volume,
    CASE WHEN COALESCE(p.resolved, 0) = 0 THEN 0.0
         ELSE 100.0 * p.yes_markets / p.resolved END AS base_rate_pct
FROM domain_labels AS l
LEFT JOIN per_domain AS p USING (domain)
ORDER BY l.position
"""

STATS_SCHEMA = {
    "domain": pl.String,
    "markets": pl.Int64,
    "trades": pl.Int64,
    "contracts": pl.Int64,
    "resolved_pct": pl.Float64,
    "median_volume": pl.Float64,
    "base_rate_pct": pl.Float64,
}


def dataset_stats(trades: Trade, markets: Market, rules: DomainRuleSet) -> pl.DataFrame:
    """
    One row per domain (rule-file order, fallback last, plus any other label seen):
    markets, trades, contracts, resolved %, median trades per market, base rate %.

    Markets without trades count with volume 0; a domain without markets is a zero row.
    """
    valid_markets = markets.filter(pl.col(VALIDATION_ERRORS).list.len() == 0)
    labels = classify_markets(market_records(markets), rules)
    ordered = rules.domains + sorted(set(labels["domain"].to_list()) - set(rules.domains))
    frames = {
        "markets": valid_markets.select("market_id", "outcome"),
        "trades": trades.filter(pl.col(VALIDATION_ERRORS).list.len() == 0).select(
            "market_id", pl.col("count").alias("contract_count")
        ),
        "market_domains": labels,
        "domain_labels": pl.DataFrame(
            {"domain": ordered, "position": list(range(len(ordered)))},
            schema={"domain": pl.String, "position": pl.Int64},
        ),
    }
    result = query_frame(DATASET_STATS_SQL, frames)
    return result.select(
        pl.col(name).cast(dtype) for name, dtype in STATS_SCHEMA.items()
    )
