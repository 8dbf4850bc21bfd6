"""Utilities."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "LineFit",
    "atomic_write_text",
    "between",
    "line_fit",
    "make_rng",
    "non_negative",
    "positive",
    "subject_seed",
)

import os
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, Any, NamedTuple

import numpy as np
from scipy import stats

from sehs.exceptions import SehsConfigError, SehsError

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable

    import attrs
    from numpy.typing import ArrayLike

    Validator = Callable[[Any, attrs.Attribute[Any], Any], None]


def make_rng(seed: int) -> np.random.Generator:
    """Seeded random generator; every random draw in the toolkit goes through one."""
    return np.random.default_rng(seed=seed)


def subject_seed(seed: int, subject_id: int) -> int:
    """Sub-seed of one subject: the global seed plus the subject id."""
    return seed + subject_id


def positive(error: type[SehsError] = SehsConfigError) -> Validator:
    """attrs validator: value must be strictly positive."""

    def _validate(
        _instance: object,
        attribute: attrs.Attribute[Any],
        value: Any,  # noqa: ANN401
    ) -> None:
        if not value > 0:
            msg = f"{attribute.name} must be positive, got {value!r}"
            raise error(msg)

    return _validate


def non_negative(error: type[SehsError] = SehsConfigError) -> Validator:
    """attrs validator: value must be zero or positive."""

    def _validate(
        _instance: object,
        attribute: attrs.Attribute[Any],
        value: Any,  # noqa: ANN401
    ) -> None:
        if not value >= 0:
            msg = f"{attribute.name} must be non-negative, got {value!r}"
            raise error(msg)

    return _validate


def between(
    low: float, high: float, error: type[SehsError] = SehsConfigError
) -> Validator:
    """attrs validator: value must lie in the closed interval [low, high]."""

    def _validate(
        _instance: object,
        attribute: attrs.Attribute[Any],
        value: Any,  # noqa: ANN401
    ) -> None:
        if not low <= value <= high:
            msg = f"{attribute.name} must be in [{low}, {high}], got {value!r}"
            raise error(msg)

    return _validate


def atomic_write_text(path: Path | str, text: str) -> None:
    """Write text to a file atomically.

    The content goes to a temporary file in the destination directory first and
    is then renamed over the destination, so readers never see a partial file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    temp_file = Path(temp_name)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        temp_file.replace(path)
    except BaseException:
        temp_file.unlink(missing_ok=True)
        raise


class LineFit(NamedTuple):
    """Least-squares line fit."""

    slope: float
    intercept: float
    p_value: float


def line_fit(x: ArrayLike, y: ArrayLike) -> LineFit:
    """Least-squares regression of y on x."""
    result = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return LineFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        p_value=float(result.pvalue),
    )
