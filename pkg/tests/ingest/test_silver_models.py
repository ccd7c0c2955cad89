import polars as pl
import pytest

from src.bronze import load_bronze_markets, load_bronze_trades, read_bronze_file
from src.bronze.loader import TRADE_COLUMNS
from src.constants import FileFormat, Side
from src.errors import DataError, LedgerAbortError
from src.etl import parse_trades
from src.silver.ledger import ErrorLedger
from src.silver.models import get_market as get_market_model
from src.silver.models import get_trade as get_trade_model
from src.silver.sources import get_market as get_market_source
from src.silver.sources import get_trade as get_trade_source
from tests.factories import market_row, trade_row


def _trades(rows: list[dict]) -> pl.DataFrame:
    bronze = pl.DataFrame(rows).with_columns(pl.all().cast(pl.String))
    bronze = bronze.with_row_index("line", offset=2).with_columns(
        pl.col("line").cast(pl.Int64), pl.lit(None, dtype=pl.String).alias("parse_error")
    )
    return get_trade_model(get_trade_source(bronze))


def _errors(model: pl.DataFrame) -> list[list[str]]:
    return model["validation_errors"].to_list()


def test_valid_trade_has_no_errors() -> None:
    model = _trades([trade_row("m1", 62, 5.0, count=3)])
    assert _errors(model) == [[]]
    row = model.row(0, named=True)
    assert (row["price"], row["count"], row["side"]) == (62, 3, "yes")


@pytest.mark.parametrize(
    ("field", "value", "rule"),
    [
        ("price_cents", "0", "price_in_range"),
        ("price_cents", "100", "price_in_range"),
        ("price_cents", "62.5", "price_integer"),
        ("price_cents", None, "price_required"),
        ("count", "0", "count_positive"),
        ("side", "maybe", "side_valid"),
        ("market_id", None, "market_id_required"),
        ("timestamp_ms", "soon", "timestamp_integer"),
    ],
)
def test_malformed_trade_fields_are_flagged(field: str, value: str | None, rule: str) -> None:
    row = trade_row("m1", 50, 2.0) | {field: value}
    assert rule in _errors(_trades([row]))[0]


def test_side_is_case_insensitive() -> None:
    model = _trades([trade_row("m1", 50, 2.0) | {"side": "NO"}])
    assert _errors(model) == [[]]
    assert model["side"].to_list() == ["no"]


def test_market_ids_must_be_unique(write_csv) -> None:
    path = write_csv(
        "markets.csv",
        [market_row("m1", "T"), market_row("m1", "T"), market_row("m2", "T", outcome="draw")],
    )
    model = get_market_model(get_market_source(load_bronze_markets(path)))
    errors = _errors(model)
    assert "market_id_unique" in errors[0] and "market_id_unique" in errors[1]
    assert errors[2] == ["outcome_valid"]


def test_missing_required_column_is_a_data_error(write_csv) -> None:
    path = write_csv("trades.csv", [{"market_id": "m1", "price_cents": "50"}])
    with pytest.raises(DataError, match="missing required column"):
        load_bronze_trades([path])


def test_jsonl_undecodable_line_keeps_its_line_number() -> None:
    payload = (
        b'{"market_id": "m1", "price_cents": 40, "count": 2, "side": "yes", "timestamp_ms": 1}\n'
        b"{not json\n"
        b'{"market_id": "m2", "price_cents": 60, "count": 1, "side": "no", "timestamp_ms": 2}\n'
    )
    bronze = read_bronze_file(payload, TRADE_COLUMNS, FileFormat.JSONL)
    model = get_trade_model(get_trade_source(bronze))
    assert model["line"].to_list() == [1, 2, 3]
    assert "malformed_row" in _errors(model)[1]
    assert _errors(model)[0] == [] and _errors(model)[2] == []


def test_ledger_records_line_numbers_below_abort_threshold() -> None:
    rows = [trade_row(f"m{i}", 50, 1.0) for i in range(200)]
    rows[7] = rows[7] | {"price_cents": "0"}
    model = _trades(rows)
    ledger = ErrorLedger()
    assert ledger.record_invalid_rows("trades[0]", model) == 1
    assert ledger.to_frame().row(0) == ("trades[0]", 9, "price_in_range")


def test_ledger_aborts_above_one_percent() -> None:
    rows = [trade_row(f"m{i}", 50, 1.0) for i in range(100)]
    rows[0] = rows[0] | {"price_cents": "0"}
    rows[1] = rows[1] | {"side": "maybe"}
    with pytest.raises(LedgerAbortError, match="2 of 100"):
        ErrorLedger().record_invalid_rows("trades[0]", _trades(rows))


def test_ledger_reason_counts_split_multiple_reasons() -> None:
    ledger = ErrorLedger()
    ledger.add("markets", 4, "market_id_required;outcome_valid")
    ledger.add("markets", 9, "outcome_valid")
    assert ledger.reason_counts() == {"market_id_required": 1, "outcome_valid": 2}


def test_parse_trades_maps_fields() -> None:
    payload = b"market_id,price_cents,count,side,timestamp_ms\nm1,62,40,yes,1700000000000\n"
    (record,) = parse_trades(payload)
    assert (record.market_id, record.price, record.count) == ("m1", 62, 40)
    assert record.side == Side.YES
    assert record.timestamp == 1_700_000_000_000


def test_parse_trades_keeps_file_order() -> None:
    payload = (
        b"market_id,price_cents,count,side,timestamp_ms\n"
        b"m3,10,1,no,3\n"
        b"m1,50,2,yes,1\n"
        b"m2,90,3,YES,2\n"
    )
    assert [t.market_id for t in parse_trades(payload)] == ["m3", "m1", "m2"]


def test_parse_trades_rejects_into_the_ledger() -> None:
    payload = (
        b'{"market_id": "m1", "price_cents": 0, "count": 2, "side": "yes", "timestamp_ms": 1}\n'
        b'{"market_id": "m2", "price_cents": 60, "count": 1, "side": "no", "timestamp_ms": 2}\n'
    )
    ledger = ErrorLedger(abort_fraction=1.0)
    records = parse_trades(payload, FileFormat.JSONL, ledger, name="shard")
    assert [t.market_id for t in records] == ["m2"]
    assert ledger.to_frame().row(0) == ("shard", 1, "price_in_range")


def _jsonl_trade(i: int) -> bytes:
    return (
        f'{{"market_id": "m{i}", "price_cents": 50, "count": 1, '
        f'"side": "yes", "timestamp_ms": {i}}}\n'
    ).encode()


def test_jsonl_invalid_utf8_line_goes_to_the_ledger() -> None:
    lines = [_jsonl_trade(i) for i in range(300)]
    lines[5] = b'{"market_id": "m\xff\xfe", "price_cents": 50}\n'
    ledger = ErrorLedger()
    records = parse_trades(b"".join(lines), FileFormat.JSONL, ledger, name="shard")
    assert len(records) == 299
    (entry,) = ledger.entries
    assert entry.line == 6
    assert "malformed_row" in entry.reason.split(";")


def test_csv_invalid_utf8_line_goes_to_the_ledger() -> None:
    header = b"market_id,price_cents,count,side,timestamp_ms\n"
    rows = [f"m{i},50,1,yes,{i}\n".encode() for i in range(200)]
    rows[10] = b"m\xff,50,1,yes,10\n"
    ledger = ErrorLedger()
    records = parse_trades(header + b"".join(rows), ledger=ledger)
    assert len(records) == 199
    assert [e.line for e in ledger.entries] == [12]


def test_csv_row_with_extra_fields_is_not_truncated() -> None:
    payload = (
        b"market_id,price_cents,count,side,timestamp_ms\n"
        b"m1,50,1,yes,1\n"
        b"m2,60,2,no,2,surplus\n"
        b"m3,70,3\n"
    )
    bronze = read_bronze_file(payload, TRADE_COLUMNS)
    assert bronze["line"].to_list() == [2, 3, 4]
    assert bronze["parse_error"].to_list() == [None, "field_count", "field_count"]
    assert bronze["market_id"].to_list() == ["m1", None, None]
    model = get_trade_model(get_trade_source(bronze))
    assert "malformed_row" in _errors(model)[1]
    assert "malformed_row" in _errors(model)[2]


def test_quoted_comma_counts_as_one_field(write_csv) -> None:
    path = write_csv("markets.csv", [market_row("m1", "T", title="Yes, or no?")])
    bronze = load_bronze_markets(path)
    assert bronze["parse_error"].to_list() == [None]
    assert bronze["title"].to_list() == ["Yes, or no?"]


def test_blank_lines_keep_file_line_numbers() -> None:
    payload = (
        b"market_id,price_cents,count,side,timestamp_ms\n"
        b"\nm1,50,1,yes,1\r\n\nm2,50,1,yes,2\n"
    )
    bronze = read_bronze_file(payload, TRADE_COLUMNS)
    assert bronze["line"].to_list() == [3, 5]
    assert bronze["timestamp_ms"].to_list() == ["1", "2"]
