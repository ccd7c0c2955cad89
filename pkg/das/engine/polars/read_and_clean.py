import csv
import io
from pathlib import Path
from typing import IO

import polars as pl

from .functions.string import (
    lowercase_columns,
    nullify_string_columns,
    trim_string_columns,
)

LINE_COLUMN = "line"
PARSE_ERROR_COLUMN = "parse_error"

INVALID_UTF8 = "invalid_utf8"
FIELD_COUNT = "field_count"

Source = str | Path | IO[bytes] | bytes


def read_source_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def split_lines(data: bytes) -> list[tuple[int, bytes]]:
    """Non-blank lines with their 1-based line numbers; line endings stripped."""
    return [
        (line_no, raw.rstrip(b"\r"))
        for line_no, raw in enumerate(data.split(b"\n"), start=1)
        if raw.strip()
    ]


def _field_count(text: str) -> int:
    return len(next(csv.reader([text])))


def _scan(
    lines: list[tuple[int, bytes]], n_fields: int
) -> tuple[list[tuple[int, str]], list[tuple[int, str]]]:
    """Split data lines into decodable lines of the right width and rejected ones."""
    good: list[tuple[int, str]] = []
    bad: list[tuple[int, str]] = []
    for line_no, raw in lines:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            bad.append((line_no, INVALID_UTF8))
            continue
        if _field_count(text) != n_fields:
            bad.append((line_no, FIELD_COUNT))
        else:
            good.append((line_no, text))
    return good, bad


def _clean(df: pl.DataFrame) -> pl.DataFrame:
    """Cleans the given dataframe (lower-case columns, trim, nullify empty strings)."""
    df = lowercase_columns(df)
    df = trim_string_columns(df)
    df = nullify_string_columns(df)
    return df


def read_csv_and_clean(source: Source) -> pl.DataFrame:
    """
    Reads a header-bearing CSV as strings, cleans it, and adds the 1-based file
    `line` of every row (the header is line 1) and a `parse_error` column.

    One record per line. A line that is not valid UTF-8 or whose field count
    differs from the header's becomes an all-null row whose `parse_error`
    names the problem; every other row has a null `parse_error`.
    """
    lines = split_lines(read_source_bytes(source))
    if not lines:
        return pl.DataFrame(schema={LINE_COLUMN: pl.Int64, PARSE_ERROR_COLUMN: pl.String})

    header = lines[0][1].decode("utf-8", errors="replace")
    good, bad = _scan(lines[1:], _field_count(header))
    payload = "\n".join([header, *(text for _, text in good)]).encode("utf-8")
    df = _clean(
        pl.read_csv(
            io.BytesIO(payload),
            infer_schema=False,
            missing_utf8_is_empty_string=False,
        )
    ).with_columns(
        pl.Series(LINE_COLUMN, [line_no for line_no, _ in good], dtype=pl.Int64),
        pl.lit(None, dtype=pl.String).alias(PARSE_ERROR_COLUMN),
    )
    if not bad:
        return df

    rejected = pl.DataFrame(
        {
            LINE_COLUMN: [line_no for line_no, _ in bad],
            PARSE_ERROR_COLUMN: [reason for _, reason in bad],
        },
        schema={LINE_COLUMN: pl.Int64, PARSE_ERROR_COLUMN: pl.String},
    )
    return pl.concat([df, rejected], how="diagonal").sort(LINE_COLUMN)
