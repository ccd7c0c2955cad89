"""Silver sources layer - bronze strings parsed into typed columns.

Input: bronze DataFrame (every column a string, plus `line` and `parse_error`)
Output: LazyFrame with typed columns and the raw text of every parsed column
"""

from src.silver.sources.markets import get_market
from src.silver.sources.trades import get_trade

__all__ = [
    "get_market",
    "get_trade",
]
