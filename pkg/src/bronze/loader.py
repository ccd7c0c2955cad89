"""Read raw trade, market and rule files into string-typed polars frames."""

import json

import polars as pl

from das.engine.polars.functions.string import nullify_string_columns, trim_string_columns
from das.engine.polars.read_and_clean import (
    INVALID_UTF8,
    LINE_COLUMN,
    PARSE_ERROR_COLUMN,
    Source,
    read_csv_and_clean,
    read_source_bytes,
    split_lines,
)
from src.constants import FileFormat
from src.errors import DataError

MALFORMED_JSON = "malformed_json"

TRADE_COLUMNS = ("market_id", "price_cents", "count", "side", "timestamp_ms")
MARKET_COLUMNS = ("market_id", "event_ticker", "title", "close_time_ms", "outcome")
RULE_COLUMNS = ("match_kind", "pattern", "domain")


def _require_columns(df: pl.DataFrame, columns: tuple[str, ...], name: str) -> None:
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise DataError(f"{name}: missing required column(s) {', '.join(missing)}")


def _read_jsonl(source: Source, columns: tuple[str, ...]) -> pl.DataFrame:
    """One JSON object per line; undecodable lines become all-null rows with a parse error."""
    rows: list[dict[str, str | int | None]] = []
    for line_no, raw in split_lines(read_source_bytes(source)):
        row: dict[str, str | int | None] = {c: None for c in columns}
        row[LINE_COLUMN] = line_no
        row[PARSE_ERROR_COLUMN] = None
        try:
            obj = json.loads(raw.decode("utf-8"))
        except UnicodeDecodeError:
            row[PARSE_ERROR_COLUMN] = INVALID_UTF8
            rows.append(row)
            continue
        except json.JSONDecodeError:
            obj = None
        if not isinstance(obj, dict):
            row[PARSE_ERROR_COLUMN] = MALFORMED_JSON
        else:
            for column in columns:
                value = obj.get(column)
                row[column] = None if value is None else str(value)
        rows.append(row)
    schema = {c: pl.String for c in columns} | {
        LINE_COLUMN: pl.Int64,
        PARSE_ERROR_COLUMN: pl.String,
    }
    df = pl.DataFrame(rows, schema=schema, orient="row") if rows else pl.DataFrame(schema=schema)
    return nullify_string_columns(trim_string_columns(df))


def read_bronze_file(
    source: Source,
    columns: tuple[str, ...],
    file_format: FileFormat = FileFormat.CSV,
    name: str = "input",
) -> pl.DataFrame:
    """Read a CSV (header required) or JSONL file with every column as string.

    The returned frame has the requested `columns`, the source `line` and a
    `parse_error` column, null unless the line could not be decoded or has
    the wrong number of fields.
    """
    if file_format == FileFormat.JSONL:
        df = _read_jsonl(source, columns)
    else:
        df = read_csv_and_clean(source)
    _require_columns(df, columns, name)
    return df.select(LINE_COLUMN, *columns, PARSE_ERROR_COLUMN)


def load_bronze_trades(
    sources: list[Source] | Source, file_format: FileFormat = FileFormat.CSV
) -> list[pl.DataFrame]:
    """Read one frame per trade file shard."""
    if not isinstance(sources, list):
        sources = [sources]
    return [
        read_bronze_file(src, TRADE_COLUMNS, file_format, name=f"trades[{i}]")
        for i, src in enumerate(sources)
    ]


def load_bronze_markets(source: Source) -> pl.DataFrame:
    return read_bronze_file(source, MARKET_COLUMNS, FileFormat.CSV, name="markets")


def load_bronze_rules(source: Source) -> pl.DataFrame:
    return read_bronze_file(source, RULE_COLUMNS, FileFormat.CSV, name="rules")
