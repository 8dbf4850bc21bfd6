"""K-nearest-neighbour classifier over cycle features."""

from __future__ import annotations

__all__: tuple[str, ...] = ("KnnModel", "knn_classify")

from collections import defaultdict
from typing import TYPE_CHECKING, Any, NamedTuple

import attrs
import numpy as np
from sklearn.preprocessing import StandardScaler

from sehs.exceptions import SehsInputError, SehsStructureError

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray


def _frozen(values: ArrayLike) -> NDArray[np.float64]:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


def _frozen_labels(values: ArrayLike) -> NDArray[np.int64]:
    array = np.array(values, dtype=np.int64)
    array.setflags(write=False)
    return array


@attrs.frozen
class KnnModel:
    """Fitted KNN: z-scored training points and their labels.

    Attributes:
        mean: Per-feature training mean.
        scale: Per-feature training standard deviation (1 for constant features).
        points: Z-scored training points, one per row.
        labels: Training labels.
        k: Number of neighbours that vote.
    """

    mean: NDArray[np.float64] = attrs.field(
        converter=_frozen, eq=attrs.cmp_using(eq=np.array_equal)
    )
    scale: NDArray[np.float64] = attrs.field(
        converter=_frozen, eq=attrs.cmp_using(eq=np.array_equal)
    )
    points: NDArray[np.float64] = attrs.field(
        converter=_frozen, eq=attrs.cmp_using(eq=np.array_equal)
    )
    labels: NDArray[np.int64] = attrs.field(
        converter=_frozen_labels, eq=attrs.cmp_using(eq=np.array_equal)
    )
    k: int = 10

    def __attrs_post_init__(self) -> None:
        """Check shapes and k."""
        shape_ok = self.points.ndim == 2  # noqa: PLR2004
        if not shape_ok or len(self.points) != len(self.labels):
            msg = (
                f"{len(self.labels)} labels for training points of shape "
                f"{self.points.shape}"
            )
            raise SehsStructureError(msg)
        if not self.mean.shape == self.scale.shape == self.points.shape[1:]:
            msg = "Scaler statistics do not match the feature count"
            raise SehsStructureError(msg)
        if not 1 <= self.k <= len(self.labels):
            msg = f"k must be in [1, {len(self.labels)}], got {self.k}"
            raise SehsInputError(msg)

    @classmethod
    def fit(cls, features: ArrayLike, labels: ArrayLike, k: int = 10) -> KnnModel:
        """Store the training set, z-scored with its own statistics.

        Raises:
            SehsInputError: If the training set is empty or `k` exceeds it.
        """
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or len(x) == 0:  # noqa: PLR2004
            msg = "KNN needs a non-empty 2-D training set"
            raise SehsInputError(msg)
        scaler = StandardScaler().fit(x)
        return cls(
            mean=scaler.mean_,
            scale=scaler.scale_,
            points=scaler.transform(x),
            labels=labels,
            k=k,
        )

    def _vote(self, query: NDArray[np.float64]) -> int:
        class Neighbour(NamedTuple):
            """Training point distance."""

            index: int
            distance: float

        distances = np.sqrt(np.sum((self.points - query) ** 2, axis=1))
        neighbours = [
            Neighbour(index=i, distance=float(d)) for i, d in enumerate(distances)
        ]
        neighbours.sort(key=lambda x: (x.distance, x.index))

        votes: defaultdict[int, int] = defaultdict(int)
        summed: defaultdict[int, float] = defaultdict(float)
        for neighbour in neighbours[: self.k]:
            label = int(self.labels[neighbour.index])
            votes[label] += 1
            summed[label] += neighbour.distance

        # Most votes, then smallest summed distance, then smallest label.
        return min(votes, key=lambda label: (-votes[label], summed[label], label))

    def predict(self, queries: ArrayLike) -> NDArray[np.int64]:
        """Labels of one or more raw (unscaled) feature vectors."""
        q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if q.shape[1] != self.points.shape[1]:
            msg = (
                f"Queries have {q.shape[1]} features, the model expects "
                f"{self.points.shape[1]}"
            )
            raise SehsStructureError(msg)
        scaled = (q - self.mean) / self.scale
        return np.array([self._vote(row) for row in scaled], dtype=np.int64)

    def to_payload(self) -> dict[str, Any]:
        """JSON-compatible representation."""
        return {
            "k": self.k,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "points": self.points.tolist(),
            "labels": self.labels.tolist(),
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> KnnModel:
        """Inverse of `to_payload`."""
        return cls(
            mean=payload["mean"],
            scale=payload["scale"],
            points=payload["points"],
            labels=payload["labels"],
            k=int(payload["k"]),
        )


def knn_classify(
    train_features: ArrayLike, train_labels: ArrayLike, query: ArrayLike, k: int
) -> int:
    """Majority label of the `k` nearest training points to `query`.

    Features are z-scored with the training statistics. Distance is Euclidean.
    Tied classes are separated by the smallest summed neighbour distance.
    """
    model = KnnModel.fit(train_features, train_labels, k)
    return int(model.predict(query)[0])
