"""Error ledger: rejected input rows with their line numbers and reasons."""

from __future__ import annotations

from dataclasses import dataclass, field

import polars as pl

from das.logger import log_info, log_warn
from src.errors import LedgerAbortError
from src.silver.models.validation import VALIDATION_ERRORS

ABORT_FRACTION = 0.01


@dataclass(frozen=True, slots=True)
class LedgerEntry:
    source: str
    line: int
    reason: str


@dataclass
class ErrorLedger:
    """Collects rejected rows across every input file of a run."""

    entries: list[LedgerEntry] = field(default_factory=list)
    abort_fraction: float = ABORT_FRACTION

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, source: str, line: int, reason: str) -> None:
        self.entries.append(LedgerEntry(source, line, reason))

    def record_invalid_rows(self, source: str, model_df: pl.DataFrame) -> int:
        """
        Add every row with validation errors; abort when more than 1% of the
        file's rows are malformed. Returns the number of rejected rows.
        """
        invalid = model_df.filter(pl.col(VALIDATION_ERRORS).list.len() > 0)
        for row in invalid.select("line", VALIDATION_ERRORS).iter_rows(named=True):
            self.add(source, row["line"], ";".join(row[VALIDATION_ERRORS]))
        total = model_df.height
        rejected = invalid.height
        if rejected:
            log_warn(f"{source}: {rejected} of {total} rows rejected")
        else:
            log_info(f"{source}: {total} rows, none rejected")
        if total and rejected / total > self.abort_fraction:
            raise LedgerAbortError(
                f"{source}: {rejected} of {total} rows malformed "
                f"(more than {self.abort_fraction:.0%}); first at line "
                f"{invalid['line'][0]}: {';'.join(invalid[VALIDATION_ERRORS][0])}"
            )
        return rejected

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "source": [e.source for e in self.entries],
                "line": [e.line for e in self.entries],
                "reason": [e.reason for e in self.entries],
            },
            schema={"source": pl.String, "line": pl.Int64, "reason": pl.String},
        )

    def reason_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.entries:
            for reason in entry.reason.split(";"):
                counts[reason] = counts.get(reason, 0) + 1
        return dict(sorted(counts.items()))
