"""Shared vocabularies and grid constants for the calibration engine."""

from enum import StrEnum


class Side(StrEnum):
    YES = "yes"
    NO = "no"


class Outcome(StrEnum):
    YES = "yes"
    NO = "no"
    UNRESOLVED = "unresolved"


class FileFormat(StrEnum):
    CSV = "csv"
    JSONL = "jsonl"


class MatchKind(StrEnum):
    TICKER_PREFIX = "ticker_prefix"
    TITLE_REGEX = "title_regex"


class WeightScheme(StrEnum):
    TRADE = "trade"
    CONTRACT = "contract"


class Component(StrEnum):
    MU = "mu"
    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"
    SIZE_HORIZON = "size_horizon"


class DecompositionType(StrEnum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"


class ScaleVariant(StrEnum):
    WITHIN_HORIZON = "within_horizon"
    AGGREGATE = "aggregate"


class BootstrapMethod(StrEnum):
    CELL_LEVEL = "cell_level"
    MARKET_CLUSTERED = "market_clustered"


class BetaConstraint(StrEnum):
    DOUBLE = "double"
    SINGLE = "single"


CANONICAL_ORDER: tuple[Component, ...] = (
    Component.MU,
    Component.ALPHA,
    Component.BETA,
    Component.GAMMA,
)

FALLBACK_DOMAIN = "Other"

DEFAULT_DOMAINS: tuple[str, ...] = (
    "Sports",
    "Crypto",
    "Politics",
    "Finance",
    "Weather",
    "Entertainment",
)

# Interior edges; bins are [0, 1h), [1h, 3h), ..., [1mo, inf) with a 30-day month.
DEFAULT_HORIZON_EDGES_HOURS: tuple[float, ...] = (1, 3, 6, 12, 24, 48, 168, 720)
HORIZON_LABELS: tuple[str, ...] = (
    "0-1h",
    "1-3h",
    "3-6h",
    "6-12h",
    "12-24h",
    "24-48h",
    "2d-1w",
    "1w-1mo",
    "1mo+",
)

# Interior edges on contract count; bins are {1}, 2-10, 11-100, >100.
DEFAULT_SIZE_EDGES: tuple[int, ...] = (2, 11, 101)
SIZE_LABELS: tuple[str, ...] = ("Single", "Small", "Medium", "Large")

# log of the geometric means of {1}, [2,10], [11,100], [101,1000].
DEFAULT_REPRESENTATIVE_LOG_SIZE: tuple[float, ...] = (
    0.0,
    0.5 * 2.995732273553991,  # log sqrt(20)
    0.5 * 7.003065458786462,  # log sqrt(1100)
    0.5 * 11.522875795823397,  # log sqrt(101 * 1000)
)

# Bins 3-6h through 1mo+; the two shortest bins carry timestamp noise on some venues.
DEFAULT_RELIABLE_BINS: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
