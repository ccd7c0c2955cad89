"""Bronze layer - raw trade, market and rule files read as strings."""

from src.bronze.loader import (
    MARKET_COLUMNS,
    RULE_COLUMNS,
    TRADE_COLUMNS,
    load_bronze_markets,
    load_bronze_rules,
    load_bronze_trades,
    read_bronze_file,
)

__all__ = [
    "MARKET_COLUMNS",
    "RULE_COLUMNS",
    "TRADE_COLUMNS",
    "load_bronze_markets",
    "load_bronze_rules",
    "load_bronze_trades",
    "read_bronze_file",
]
