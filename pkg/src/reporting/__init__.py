"""Reporting helpers (artifact tables, run manifest and console summaries)."""

from .artifacts import ArtifactWriter, file_digest, package_versions
from .etl_reporting import (
    print_diagnostics,
    print_fit_summary,
    print_frame,
    print_ftable,
    print_ingest_summary,
    print_ppc,
    print_variance_table,
)
from .validation_reports import (
    get_ledger_report,
    get_validation_report,
    get_validation_summary,
)

__all__ = [
    "ArtifactWriter",
    "file_digest",
    "get_ledger_report",
    "get_validation_report",
    "get_validation_summary",
    "package_versions",
    "print_diagnostics",
    "print_fit_summary",
    "print_frame",
    "print_ftable",
    "print_ingest_summary",
    "print_ppc",
    "print_variance_table",
]
