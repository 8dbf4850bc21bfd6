"""Tests for utils module."""

from __future__ import annotations

from typing import TYPE_CHECKING

import attrs
import numpy as np
import pytest

from sehs.exceptions import SehsConfigError, SehsStructureError
from sehs.utils import (
    atomic_write_text,
    between,
    line_fit,
    make_rng,
    non_negative,
    positive,
    subject_seed,
)

if TYPE_CHECKING:
    from pathlib import Path


@attrs.frozen
class _Box:
    size: float = attrs.field(validator=positive())
    margin: float = attrs.field(default=0.0, validator=non_negative())
    ratio: float = attrs.field(
        default=0.5, validator=between(0.0, 1.0, error=SehsStructureError)
    )


class TestRandomness:
    """Tests for make_rng and subject_seed."""

    def test_same_seed_same_draws(self) -> None:
        """Two generators with the same seed should draw the same numbers."""
        assert np.array_equal(make_rng(3).normal(size=5), make_rng(3).normal(size=5))

    def test_subject_seed_rule(self) -> None:
        """Subject sub-seeds are the global seed plus the subject id."""
        assert subject_seed(7, 0) == 7
        assert subject_seed(7, 12) == 19


class TestValidators:
    """Tests for the attrs validators."""

    def test_valid(self) -> None:
        """Valid values should pass."""
        box = _Box(size=1.0, margin=0.0, ratio=1.0)
        assert box.ratio == 1.0

    def test_positive(self) -> None:
        """Zero is not positive."""
        with pytest.raises(SehsConfigError, match="size must be positive"):
            _Box(size=0.0)

    def test_non_negative(self) -> None:
        """Negative values should be rejected."""
        with pytest.raises(SehsConfigError, match="margin must be non-negative"):
            _Box(size=1.0, margin=-0.1)

    def test_between_custom_error(self) -> None:
        """between should raise the configured error class."""
        with pytest.raises(SehsStructureError, match=r"ratio must be in \[0.0, 1.0\]"):
            _Box(size=1.0, ratio=1.5)


class TestAtomicWriteText:
    """Tests for atomic_write_text()."""

    def test_writes_and_creates_parents(self, tmp_path: Path) -> None:
        """The file should be written, parent directories created."""
        target = tmp_path / "a" / "b.txt"
        atomic_write_text(target, "hello\n")
        assert target.read_text(encoding="utf-8") == "hello\n"

    def test_replaces_and_leaves_no_temp_files(self, tmp_path: Path) -> None:
        """Overwriting should leave only the destination behind."""
        target = tmp_path / "out.txt"
        atomic_write_text(target, "one")
        atomic_write_text(target, "two")
        assert target.read_text(encoding="utf-8") == "two"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


class TestLineFit:
    """Tests for line_fit()."""

    def test_exact_line(self) -> None:
        """A noiseless line is recovered exactly with a tiny p-value."""
        x = np.arange(10.0)
        fit = line_fit(x, 2.0 * x + 1.0)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.p_value < 1e-10
