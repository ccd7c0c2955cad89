import types
from typing import Self, TypeVar, Union, get_args, get_origin

from pandera.api.polars.model import DataFrameModel
from pandera.errors import SchemaError

import polars as pl

from ..typed_dataframe import ColBase, TypedDataFrameBase

T = TypeVar("T")

_SCALAR_DTYPES: dict[type, pl.DataType] = {
    str: pl.String(),
    int: pl.Int64(),
    float: pl.Float64(),
    bool: pl.Boolean(),
}


def to_polars_dtype(python_type: object) -> pl.DataType:
    """Map a column annotation (`int`, `str | None`, `list[str]`, ...) to a polars dtype."""
    origin = get_origin(python_type)
    if origin in (Union, types.UnionType):
        inner = [arg for arg in get_args(python_type) if arg is not type(None)]
        return to_polars_dtype(inner[0])
    if origin is list:
        return pl.List(to_polars_dtype(get_args(python_type)[0]))
    try:
        return _SCALAR_DTYPES[python_type]  # type: ignore[index]
    except KeyError as exc:
        raise TypeError(f"No polars dtype for column type {python_type!r}") from exc


class Col[T](ColBase):
    """Polars column descriptor."""

    def __get__(self, obj, objtype=None) -> pl.Expr:
        """
        Return Polars column reference when accessed via instance OR class.
        Argument `obj` is ignored in both cases.
        """
        return pl.col(self.name)


class _PolarsTyped(TypedDataFrameBase, abstract=True):
    DataFrameModel = DataFrameModel
    SchemaError = SchemaError

    @classmethod
    def polars_schema(cls) -> dict[str, pl.DataType]:
        """Polars schema derived from the declared columns."""
        return {name: to_polars_dtype(tp) for name, tp in cls._columns.items()}

    @classmethod
    def select_columns(cls, df: pl.DataFrame | pl.LazyFrame):
        """Keep the declared columns, in declaration order, cast to the declared dtypes."""
        return df.select(
            pl.col(name).cast(dtype) for name, dtype in cls.polars_schema().items()
        )


class TypedDataFrame(_PolarsTyped, abstract=True):
    """
    Base class for typed eager polars DataFrame.
    Numerical stages pull columns out as numpy arrays, so they work on collected frames.
    """

    @classmethod
    def from_df(cls, df: pl.DataFrame, validate: bool = True) -> Self:
        if validate:
            cls._schema_class.validate(df)
        return cls(df)

    @classmethod
    def from_dicts(cls, dicts: list[dict], schema=None) -> Self:
        return cls.from_df(pl.from_dicts(dicts, schema or cls.polars_schema()))

    @classmethod
    def empty(cls) -> Self:
        return cls.from_df(pl.DataFrame(schema=cls.polars_schema()), validate=False)
