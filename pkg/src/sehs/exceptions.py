"""Custom exceptions for the SEHS toolkit."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "SehsConfigError",
    "SehsDataError",
    "SehsError",
    "SehsInputError",
    "SehsParseError",
    "SehsStructureError",
    "SehsTrainingError",
)


class SehsError(Exception):
    """Base exception for the SEHS toolkit.

    All toolkit exceptions inherit from this class, making it easy to catch all
    library errors with a single except clause.
    """


class SehsConfigError(SehsError):
    """Invalid configuration.

    Raised when:
    - A configuration value fails its invariants (e.g. non-positive resistance)
    - The output sample rate violates the integrator's Nyquist bound
    - A run configuration file contains unknown keys or unparsable values
    - A referenced input file does not exist
    """


class SehsDataError(SehsError):
    """Bad data handed to an operation."""


class SehsInputError(SehsDataError):
    """Input precondition failure.

    Raised when a signal is too short, a collection is empty, or a raw ADC code
    is out of range.
    """


class SehsStructureError(SehsDataError):
    """Structural problem with a data container.

    Raised for missing channels, unequal channel lengths and shape mismatches.
    """


class SehsParseError(SehsDataError):
    """Malformed trace, dataset or model file.

    Attributes:
        line: 1-based line number of the offending entry, if known.
        column: 1-based column number of the offending entry, if known.
    """

    def __init__(
        self, message: str, *, line: int | None = None, column: int | None = None
    ) -> None:
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            message = f"{message} ({where})"
        super().__init__(message)


class SehsTrainingError(SehsError):
    """Training diverged.

    Attributes:
        epoch: Epoch at which the loss became non-finite.
    """

    def __init__(self, message: str, *, epoch: int) -> None:
        self.epoch = epoch
        super().__init__(f"{message} (epoch {epoch})")
