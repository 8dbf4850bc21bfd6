"""Tests for the sehs public API."""

from __future__ import annotations

import sehs


class TestPublicAPI:
    """Test that the public API is correctly exported."""

    def test_models_exported(self) -> None:
        """Traces, cycles and datasets should be exported."""
        assert hasattr(sehs, "VoltageTrace")
        assert hasattr(sehs, "GaitCycle")
        assert hasattr(sehs, "Dataset")

    def test_operations_exported(self) -> None:
        """The simulator, filter and distance should be exported."""
        assert callable(sehs.simulate)
        assert callable(sehs.filter_trace)
        assert sehs.dtw_distance([0.0, 1.0], [0.0, 1.0]) == 0.0

    def test_exceptions_exported(self) -> None:
        """All custom exceptions should be exported under one base."""
        for name in (
            "SehsConfigError",
            "SehsDataError",
            "SehsInputError",
            "SehsParseError",
            "SehsStructureError",
            "SehsTrainingError",
        ):
            assert issubclass(getattr(sehs, name), sehs.SehsError)

    def test_version(self) -> None:
        """The version comes from the installed distribution."""
        assert isinstance(sehs.__version__, str)
        assert sehs.__version__

    def test_all_exports_match(self) -> None:
        """__all__ should match actual exports."""
        for name in sehs.__all__:
            assert hasattr(sehs, name), f"{name} in __all__ but not exported"
