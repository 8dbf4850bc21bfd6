"""Tests for custom exceptions."""

from __future__ import annotations

import pytest

from sehs.exceptions import (
    SehsConfigError,
    SehsDataError,
    SehsError,
    SehsInputError,
    SehsParseError,
    SehsStructureError,
    SehsTrainingError,
)


class TestExceptionHierarchy:
    """Test that all exceptions inherit from SehsError."""

    @pytest.mark.parametrize(
        "error",
        [SehsConfigError, SehsDataError, SehsTrainingError],
    )
    def test_direct_subclasses(self, error: type[SehsError]) -> None:
        """Top-level errors should derive from SehsError."""
        assert issubclass(error, SehsError)

    @pytest.mark.parametrize(
        "error", [SehsInputError, SehsStructureError, SehsParseError]
    )
    def test_data_errors(self, error: type[SehsError]) -> None:
        """Input, structure and parse errors should be data errors."""
        assert issubclass(error, SehsDataError)

    def test_config_is_not_data_error(self) -> None:
        """Configuration errors map to a different exit code than data errors."""
        assert not issubclass(SehsConfigError, SehsDataError)


class TestParseError:
    """Tests for SehsParseError."""

    def test_location_in_message(self) -> None:
        """Line and column should be appended to the message."""
        error = SehsParseError("bad value", line=3, column=7)
        assert error.line == 3
        assert error.column == 7
        assert str(error) == "bad value (line 3, column 7)"

    def test_line_only(self) -> None:
        """A line without a column should still be reported."""
        assert str(SehsParseError("bad", line=2)) == "bad (line 2)"

    def test_no_location(self) -> None:
        """Without a location the message is unchanged."""
        error = SehsParseError("bad")
        assert error.line is None
        assert str(error) == "bad"


class TestTrainingError:
    """Tests for SehsTrainingError."""

    def test_carries_epoch(self) -> None:
        """The epoch should be kept and reported."""
        with pytest.raises(SehsTrainingError, match=r"diverged \(epoch 4\)") as info:
            raise SehsTrainingError("diverged", epoch=4)  # noqa: EM101
        assert info.value.epoch == 4


class TestCatchAllExceptions:
    """Test that SehsError can catch all library exceptions."""

    def test_catch_parse_error(self) -> None:
        """SehsError should catch SehsParseError."""
        msg = "test"
        with pytest.raises(SehsError):
            raise SehsParseError(msg)

    def test_catch_structure_error_as_data_error(self) -> None:
        """SehsDataError should catch SehsStructureError."""
        msg = "test"
        with pytest.raises(SehsDataError):
            raise SehsStructureError(msg)
