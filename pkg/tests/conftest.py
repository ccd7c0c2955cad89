import contextlib
import os
import time
from collections.abc import Callable
from pathlib import Path

import polars as pl
import pytest

from src.config import FitConfig
from src.constants import WeightScheme


def set_env() -> None:
    os.environ["PYARROW_IGNORE_TIMEZONE"] = "1"
    os.environ["TZ"] = "UTC"
    with contextlib.suppress(AttributeError):
        time.tzset()


def pytest_configure(config: pytest.Config) -> None:
    set_env()


@pytest.fixture
def fit_cfg() -> FitConfig:
    return FitConfig()


@pytest.fixture
def trade_cfg() -> FitConfig:
    return FitConfig(weight_scheme=WeightScheme.TRADE)


@pytest.fixture
def write_csv(tmp_path: Path) -> Callable[[str, list[dict]], Path]:
    """Write rows as a CSV under tmp_path; every value is written as given."""

    def write(name: str, rows: list[dict]) -> Path:
        path = tmp_path / name
        pl.DataFrame(rows).write_csv(path)
        return path

    return write
