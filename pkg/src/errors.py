"""Exception hierarchy; each family maps to a command exit code."""

from __future__ import annotations


class CalibrationEngineError(Exception):
    """Root of all engine errors."""

    exit_code = 1


class ConfigError(CalibrationEngineError):
    """Invalid configuration, missing input file or invalid classification rule."""

    exit_code = 2


class DataError(CalibrationEngineError):
    """Input data cannot support the requested analysis."""

    exit_code = 3


class NumericalError(CalibrationEngineError):
    """A numerical procedure failed or its input is degenerate."""

    exit_code = 4


class LedgerAbortError(DataError):
    """Too many malformed rows in one input file."""


class NegativeHorizonError(DataError):
    """Trade executed after its market closed."""


class IncompleteGridError(DataError):
    """The slope grid misses cells required by a full-grid operation."""

    def __init__(self, missing: list[tuple[str, int, int]]):
        self.missing = missing
        preview = ", ".join(f"({d}, {t}, {s})" for d, t, s in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        super().__init__(f"Incomplete grid: missing cells {preview}{more}")


class MissingCellError(DataError):
    """A single required cell is absent."""


class NoOverlapError(DataError):
    """Two grids share no domain labels."""


class DomainError(NumericalError):
    """Input outside the domain of a transform."""


class SeparationError(NumericalError):
    """All outcomes identical; the calibration slope is unbounded."""


class IdentificationError(NumericalError):
    """Fewer than two distinct prices; the slope is not identified."""


class StructuralError(NumericalError):
    """Design matrix is rank deficient or residual degrees of freedom are not positive."""


class DegenerateWeightError(NumericalError):
    """A cell carries zero standard error, hence an infinite weight."""


class UnstableBootstrapError(NumericalError):
    """Too many bootstrap replicates failed to refit."""


class SamplerError(NumericalError):
    """The Hamiltonian sampler could not produce finite energies."""


class GridBoundaryError(NumericalError):
    """A grid-search optimum sits on the edge of the searched range."""
