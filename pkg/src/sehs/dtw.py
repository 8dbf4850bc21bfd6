"""Dynamic time warping."""

from __future__ import annotations

__all__: tuple[str, ...] = ("dtw_distance",)

from typing import TYPE_CHECKING

import numpy as np
from numba import njit

from sehs.exceptions import SehsInputError

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray


@njit(nogil=True, cache=False)  # type: ignore[misc]
def _dtw(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    m = b.shape[0]
    previous = np.full(m + 1, np.inf)
    current = np.full(m + 1, np.inf)
    previous[0] = 0.0
    for i in range(a.shape[0]):
        current[0] = np.inf
        for j in range(m):
            best = min(previous[j], previous[j + 1], current[j])
            current[j + 1] = abs(a[i] - b[j]) + best
        previous, current = current, previous
    return float(previous[m])


def dtw_distance(a: ArrayLike, b: ArrayLike) -> float:
    """Total cost of the best warping path between two sequences.

    Local cost is the absolute difference; steps are match, insertion and
    deletion, without a window constraint.
    """
    x = np.ascontiguousarray(a, dtype=np.float64)
    y = np.ascontiguousarray(b, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size == 0 or y.size == 0:
        msg = "DTW needs two non-empty 1-D sequences"
        raise SehsInputError(msg)
    return float(_dtw(x, y))
