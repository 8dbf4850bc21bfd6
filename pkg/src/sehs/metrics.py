"""Classification metrics."""

from __future__ import annotations

__all__: tuple[str, ...] = ("EvalReport", "evaluate", "summarize_folds")

from typing import TYPE_CHECKING, Any

import attrs
import numpy as np
from loguru import logger
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from sehs.exceptions import SehsInputError, SehsStructureError

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray


def _frozen(values: ArrayLike) -> NDArray[Any]:
    array = np.array(values)
    array.setflags(write=False)
    return array


@attrs.frozen
class EvalReport:
    """Precision and recall of a classifier on a labelled test set.

    Attributes:
        confusion: Counts, rows are true classes and columns predicted classes.
        precision: Per-class precision; 0 for a class that is never predicted.
        recall: Per-class recall; NaN for a class absent from the test set.
        macro_precision: Mean precision over the classes present in the test set.
        macro_recall: Mean recall over the classes present in the test set.
        micro_precision: Pooled precision (equals accuracy).
        micro_recall: Pooled recall (equals accuracy).
        precision_std: Standard deviation of macro precision across folds.
        recall_std: Standard deviation of macro recall across folds.
    """

    confusion: NDArray[np.int64] = attrs.field(
        converter=_frozen, eq=attrs.cmp_using(eq=np.array_equal)
    )
    precision: NDArray[np.float64] = attrs.field(
        converter=_frozen, eq=attrs.cmp_using(eq=np.array_equal)
    )
    recall: NDArray[np.float64] = attrs.field(
        converter=_frozen,
        eq=attrs.cmp_using(eq=lambda a, b: np.array_equal(a, b, equal_nan=True)),
    )
    macro_precision: float
    macro_recall: float
    micro_precision: float
    micro_recall: float
    precision_std: float = 0.0
    recall_std: float = 0.0

    @classmethod
    def from_confusion(cls, confusion: ArrayLike) -> EvalReport:
        """Derive every metric from a confusion matrix."""
        cm = np.asarray(confusion, dtype=np.int64)
        if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:  # noqa: PLR2004
            msg = f"Confusion matrix must be square, got shape {cm.shape}"
            raise SehsStructureError(msg)
        n = cm.shape[0]
        present = cm.sum(axis=1) > 0
        if present.any():
            # Expand the counts back into label pairs.
            rows, cols = np.indices(cm.shape)
            y = np.repeat(rows.ravel(), cm.ravel())
            p = np.repeat(cols.ravel(), cm.ravel())
            precision, recall, _, _ = precision_recall_fscore_support(
                y, p, labels=list(range(n)), average=None, zero_division=0
            )
        else:
            precision = recall = np.zeros(n)
        recall = np.where(present, recall, np.nan)
        absent = np.flatnonzero(~present).tolist()
        if absent:
            logger.warning(
                f"Classes {absent} are absent from the test set; their recall is "
                "undefined and excluded from the macro averages."
            )
        total = float(cm.sum())
        accuracy = float(np.trace(cm) / total) if total else 0.0
        return cls(
            confusion=cm,
            precision=precision,
            recall=recall,
            macro_precision=float(precision[present].mean()) if present.any() else 0.0,
            macro_recall=float(recall[present].mean()) if present.any() else 0.0,
            micro_precision=accuracy,
            micro_recall=accuracy,
        )

    @property
    def n_classes(self) -> int:
        """Number of classes."""
        return int(self.confusion.shape[0])

    @property
    def accuracy(self) -> float:
        """Fraction of correct predictions."""
        return self.micro_recall

    def to_payload(self) -> dict[str, Any]:
        """JSON-compatible representation; undefined recalls become null."""
        return {
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "precision_std": self.precision_std,
            "recall_std": self.recall_std,
            "precision": self.precision.tolist(),
            "recall": [None if np.isnan(r) else float(r) for r in self.recall],
            "confusion": self.confusion.tolist(),
        }


def evaluate(
    true_labels: ArrayLike, predicted_labels: ArrayLike, n_classes: int
) -> EvalReport:
    """Compare predictions against the true labels.

    Raises:
        SehsInputError: If the label arrays differ in length, are empty, or hold
            a label outside [0, n_classes).
    """
    y = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if y.shape != p.shape or y.ndim != 1 or y.size == 0:
        msg = f"Label arrays must be 1-D, equal and non-empty: {y.shape}, {p.shape}"
        raise SehsInputError(msg)
    for labels in (y, p):
        if labels.min() < 0 or labels.max() >= n_classes:
            msg = f"Labels must lie in [0, {n_classes})"
            raise SehsInputError(msg)
    confusion = confusion_matrix(y, p, labels=list(range(n_classes)))
    return EvalReport.from_confusion(confusion)


def summarize_folds(reports: Sequence[EvalReport]) -> EvalReport:
    """Pool fold reports: summed confusion, fold spread of the macro metrics."""
    if not reports:
        msg = "No fold reports to summarize"
        raise SehsInputError(msg)
    pooled = EvalReport.from_confusion(sum(r.confusion for r in reports))
    return attrs.evolve(
        pooled,
        precision_std=float(np.std([r.macro_precision for r in reports])),
        recall_std=float(np.std([r.macro_recall for r in reports])),
    )
