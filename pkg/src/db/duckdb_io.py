"""DuckDB IO helpers for running SQL over polars frames."""

import duckdb
import polars as pl


def register_frames(
    con: duckdb.DuckDBPyConnection, frames: dict[str, pl.DataFrame]
) -> None:
    """Expose polars frames to the connection as named relations (via Arrow)."""
    for name, df in frames.items():
        con.register(name, df.to_arrow())


def query_frame(
    sql: str, frames: dict[str, pl.DataFrame], params: list | None = None
) -> pl.DataFrame:
    """Run one query against an in-memory connection holding `frames`."""
    with duckdb.connect() as con:
        register_frames(con, frames)
        return con.execute(sql, params or []).pl()
