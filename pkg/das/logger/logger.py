"""
das.logger.logger

Caller-tagged logger shared by every pipeline step. Writes to stderr so that
command output printed to stdout stays clean for piping.

Each message is prefixed with the calling module path and function name, e.g.
``calib/fitter.py:fit_recalibration - 3 iterations``.
"""

import inspect
import logging
import os
import sys
from enum import IntEnum
from pathlib import Path

LOGGER_NAME = "das_logger"


class LOG_LEVEL(IntEnum):
    NOTSET = 0
    DEBUG = 10
    INFO = 20
    WARN = 30
    ERROR = 40
    CRITICAL = 50


def parse_log_level(raw: str | int | None, default: LOG_LEVEL = LOG_LEVEL.INFO) -> LOG_LEVEL:
    """
    Parse a log level given as a name (DEBUG, INFO, ...) or an integer.
    Prints a warning and returns `default` if the value is not recognised.
    """
    if raw is None:
        return default
    if isinstance(raw, int):
        raw = str(raw)

    raw = raw.strip()

    # Try integer.
    if raw.isdigit():
        try:
            return LOG_LEVEL(int(raw))
        except ValueError:
            print(
                f"[WARN] Unknown numeric log level: {raw}. Falling back to default: {default.name}",
                file=sys.stderr,
            )
            return default

    # Try named log level.
    try:
        return LOG_LEVEL[raw.upper()]
    except KeyError:
        print(
            f"[WARN] Unknown log level: {raw}. Falling back to default: {default.name}",
            file=sys.stderr,
        )
        return default


def get_log_level_from_env(default: LOG_LEVEL = LOG_LEVEL.INFO) -> LOG_LEVEL:
    """Read log level from environment variable LOG_LEVEL."""
    return parse_log_level(os.getenv("LOG_LEVEL"), default)


def _get_caller_path(levels: int = 2) -> str:
    stack = inspect.stack()[3]
    function_name = stack.function
    filepath = Path(stack.filename)
    short_path = "/".join(filepath.parts[-levels:])
    return f"{short_path}:{function_name}"


def _setup_logger() -> logging.Logger:
    logger = logging.getLogger(LOGGER_NAME)
    if not logger.hasHandlers():
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")
        )
        logger.addHandler(handler)
        logger.propagate = False
        logger.setLevel(get_log_level_from_env())
    return logger


def configure_logging(level: LOG_LEVEL | str | int | None = None) -> logging.Logger:
    """Set the level of the shared logger; `None` re-reads LOG_LEVEL."""
    logger = _setup_logger()
    if level is None:
        logger.setLevel(get_log_level_from_env())
    elif isinstance(level, LOG_LEVEL):
        logger.setLevel(level)
    else:
        logger.setLevel(parse_log_level(level))
    return logger


def _log(level: LOG_LEVEL, message: str | None = None):
    logger = _setup_logger()
    if not logger.isEnabledFor(level):
        return
    msg = f" - {message}" if message else ""
    logger.log(level, f"{_get_caller_path()}{msg}")


# Public logging API.
def log_debug(msg: str | None = None):
    _log(LOG_LEVEL.DEBUG, msg)


def log_info(msg: str | None = None):
    _log(LOG_LEVEL.INFO, msg)


def log_warn(msg: str | None = None):
    _log(LOG_LEVEL.WARN, msg)


def log_error(msg: str | None = None):
    _log(LOG_LEVEL.ERROR, msg)
