import polars as pl


def get_string_column_names(df: pl.DataFrame | pl.LazyFrame) -> list[str]:
    """Returns a list of column names with the string data type."""
    return [name for name, dtype in df.collect_schema().items() if dtype == pl.String]


def lowercase_columns(df: pl.DataFrame | pl.LazyFrame):
    """Changes the column names to lowercase, trimmed format."""
    columns_to_rename = [c for c in df.collect_schema().names() if c != c.strip().lower()]
    return df.rename({c: c.strip().lower() for c in columns_to_rename})


def trim_string_columns(df: pl.DataFrame | pl.LazyFrame):
    """Trims whitespace from all string columns in the DataFrame."""
    string_cols = get_string_column_names(df)
    return df.with_columns(
        *[pl.col(col_name).str.strip_chars() for col_name in string_cols]
    )


def nullify_string_columns(df: pl.DataFrame | pl.LazyFrame):
    """Replaces empty strings in all string columns with null values."""
    string_cols = get_string_column_names(df)
    return df.with_columns(
        *[pl.col(col_name).replace("", None) for col_name in string_cols]
    )


def lowercase_values(col: pl.Expr) -> pl.Expr:
    """Lower-cases string values, so enum columns accept `YES`, `Yes`, `yes`."""
    return col.str.to_lowercase()


def parse_integer(col: pl.Expr) -> pl.Expr:
    """
    Parses a string column as an integer, null when the value is not an integer.

    Example:
        "62" → 62
        "62.0" → null
        "abc" → null
    """
    return col.cast(pl.Int64, strict=False)
