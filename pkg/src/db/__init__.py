"""DuckDB helpers."""

from src.db.duckdb_io import query_frame, register_frames

__all__ = [
    "query_frame",
    "register_frames",
]
