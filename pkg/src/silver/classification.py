"""Deterministic classification of markets into domains by an ordered rule list.

Regexes are compiled when the rule file is loaded, so a bad pattern fails the
run before any data is touched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import polars as pl

from das.logger import log_info
from src.bronze.loader import Source, load_bronze_rules
from src.common.models import MarketRecord
from src.constants import FALLBACK_DOMAIN, MatchKind
from src.errors import ConfigError, DataError


@dataclass(frozen=True, slots=True)
class DomainRule:
    match_kind: MatchKind
    pattern: str
    domain: str
    regex: re.Pattern[str] | None = field(default=None, compare=False)

    def matches(self, market: MarketRecord) -> bool:
        if self.match_kind == MatchKind.TICKER_PREFIX:
            return market.event_ticker.startswith(self.pattern)
        return self.regex is not None and self.regex.search(market.title) is not None


@dataclass(frozen=True, slots=True)
class DomainRuleSet:
    """Ordered rules; the first match wins, otherwise the fallback domain."""

    rules: tuple[DomainRule, ...] = ()
    fallback_domain: str = FALLBACK_DOMAIN

    @property
    def domains(self) -> list[str]:
        """Domain labels in first-appearance order, fallback last."""
        seen = dict.fromkeys(rule.domain for rule in self.rules)
        seen.setdefault(self.fallback_domain, None)
        return list(seen)


def make_rule(match_kind: str, pattern: str, domain: str) -> DomainRule:
    """Build one rule, compiling title regexes. Raises ConfigError on invalid input."""
    try:
        kind = MatchKind(match_kind)
    except ValueError as exc:
        raise ConfigError(
            f"Unknown match_kind {match_kind!r}; expected one of "
            f"{', '.join(k.value for k in MatchKind)}"
        ) from exc
    if not pattern:
        raise ConfigError(f"Empty pattern for domain {domain!r}")
    if not domain:
        raise ConfigError(f"Rule {match_kind}:{pattern!r} has no domain")
    regex = None
    if kind == MatchKind.TITLE_REGEX:
        try:
            regex = re.compile(pattern)
        except re.error as exc:
            raise ConfigError(f"Invalid title regex {pattern!r}: {exc}") from exc
    return DomainRule(kind, pattern, domain, regex)


def rules_from_frame(
    rules_df: pl.DataFrame, fallback_domain: str = FALLBACK_DOMAIN
) -> DomainRuleSet:
    rules = []
    for row in rules_df.iter_rows(named=True):
        if row.get("parse_error"):
            raise ConfigError(
                f"Rule file line {row['line']}: unreadable row ({row['parse_error']})"
            )
        try:
            rules.append(
                make_rule(row["match_kind"] or "", row["pattern"] or "", row["domain"] or "")
            )
        except ConfigError as exc:
            raise ConfigError(f"Rule file line {row['line']}: {exc}") from exc
    return DomainRuleSet(tuple(rules), fallback_domain)


def load_rules(
    source: Source | None, fallback_domain: str = FALLBACK_DOMAIN
) -> DomainRuleSet:
    """Read an ordered `match_kind,pattern,domain` CSV. No file means fallback only."""
    if source is None:
        return DomainRuleSet((), fallback_domain)
    if isinstance(source, (str, Path)) and not Path(source).is_file():
        raise ConfigError(f"Rule file does not exist: {source}")
    try:
        rules_df = load_bronze_rules(source)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc
    ruleset = rules_from_frame(rules_df, fallback_domain)
    log_info(f"{len(ruleset.rules)} classification rules loaded")
    return ruleset


def classify_domain(market: MarketRecord, rules: DomainRuleSet) -> str:
    for rule in rules.rules:
        if rule.matches(market):
            return rule.domain
    return rules.fallback_domain


def classify_markets(
    markets: list[MarketRecord], rules: DomainRuleSet, column: str = "domain"
) -> pl.DataFrame:
    """`market_id` → label frame, one row per market."""
    return pl.DataFrame(
        {
            "market_id": [m.market_id for m in markets],
            column: [classify_domain(m, rules) for m in markets],
        },
        schema={"market_id": pl.String, column: pl.String},
    )
