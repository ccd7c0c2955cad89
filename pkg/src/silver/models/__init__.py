"""Silver models layer - typed trades and markets with validation errors.

Input: sources LazyFrame (typed columns plus raw text)
Output: typed frame whose `validation_errors` list is empty for valid rows
"""

from src.silver.models.markets import get_market
from src.silver.models.trades import get_trade

__all__ = [
    "get_market",
    "get_trade",
]
