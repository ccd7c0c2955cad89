import pytest

from src.common.models import MarketRecord
from src.constants import Outcome
from src.errors import ConfigError
from src.silver.classification import (
    DomainRuleSet,
    classify_domain,
    load_rules,
    make_rule,
)


def _market(ticker: str, title: str = "") -> MarketRecord:
    return MarketRecord("m1", ticker, title, 0, Outcome.YES)


@pytest.fixture
def rules() -> DomainRuleSet:
    return DomainRuleSet(
        (
            make_rule("ticker_prefix", "KXNBA", "Sports"),
            make_rule("title_regex", r"(?i)election|senate", "Politics"),
            make_rule("ticker_prefix", "KX", "Finance"),
        )
    )


def test_first_matching_rule_wins(rules: DomainRuleSet) -> None:
    assert classify_domain(_market("KXNBA-25", "Senate basketball caucus"), rules) == "Sports"
    assert classify_domain(_market("KXFED-25", "Who wins the election?"), rules) == "Politics"
    assert classify_domain(_market("KXFED-25", "Rate cut"), rules) == "Finance"


def test_unmatched_market_goes_to_fallback(rules: DomainRuleSet) -> None:
    assert classify_domain(_market("POLY-1", "Rain in Paris"), rules) == "Other"


def test_domains_keep_rule_order_with_fallback_last(rules: DomainRuleSet) -> None:
    assert rules.domains == ["Sports", "Politics", "Finance", "Other"]


def test_invalid_regex_is_a_config_error() -> None:
    with pytest.raises(ConfigError, match="Invalid title regex"):
        make_rule("title_regex", "(unclosed", "Politics")


def test_unknown_match_kind_is_a_config_error() -> None:
    with pytest.raises(ConfigError, match="Unknown match_kind"):
        make_rule("suffix", "X", "Sports")


def test_rule_file_errors_name_the_line(write_csv) -> None:
    path = write_csv(
        "rules.csv",
        [
            {"match_kind": "ticker_prefix", "pattern": "KXNBA", "domain": "Sports"},
            {"match_kind": "title_regex", "pattern": "[bad", "domain": "Politics"},
        ],
    )
    with pytest.raises(ConfigError, match="line 3"):
        load_rules(path)


def test_missing_rule_file_is_a_config_error(tmp_path) -> None:
    with pytest.raises(ConfigError, match="does not exist"):
        load_rules(tmp_path / "absent.csv")


def test_no_rule_file_means_fallback_only() -> None:
    rules = load_rules(None)
    assert rules.domains == ["Other"]
    assert classify_domain(_market("KXNBA"), rules) == "Other"


def test_unreadable_rule_line_is_a_config_error() -> None:
    payload = b"match_kind,pattern,domain\nticker_prefix,S-,Sports,extra\n"
    with pytest.raises(ConfigError, match="line 2: unreadable row"):
        load_rules(payload)
