import polars as pl

MS_PER_HOUR = 3_600_000


def hours_between(start_ms_col: pl.Expr, end_ms_col: pl.Expr) -> pl.Expr:
    """
    Duration in hours from `start_ms_col` to `end_ms_col`, both epoch milliseconds.
    Negative when the end lies before the start.

    :param start_ms_col: Start instant in milliseconds since epoch.
    :param end_ms_col: End instant in milliseconds since epoch.
    :return: Expression with the duration in (fractional) hours.
    """
    return (end_ms_col - start_ms_col).cast(pl.Float64) / MS_PER_HOUR


def bin_index(value_col: pl.Expr, edges: list[float]) -> pl.Expr:
    """
    Index of the left-closed, right-open interval containing the value, for the
    partition defined by the ascending interior `edges`.

    Example with edges [1, 3]:
        0.5 → 0, 1 → 1, 2.9 → 1, 3 → 2
    """
    if not edges:
        return pl.lit(0, dtype=pl.Int64)
    return pl.sum_horizontal(
        [(value_col >= edge).cast(pl.Int64) for edge in edges]
    )
