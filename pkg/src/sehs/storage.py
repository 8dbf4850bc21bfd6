"""Model files.

A model file is a JSON object:

```json
{"format": "sehs-model", "version": 1, "kind": "bilstm",
 "spec": {...}, "payload": {...}}
```

`kind` is `knn`, `unilstm` or `bilstm`. For recurrent models `spec` holds the
network shape and `payload` the weights; for KNN `spec` holds the sample rate
and `payload` the stored training set.
"""

from __future__ import annotations

__all__: tuple[str, ...] = ("MODEL_FORMAT", "MODEL_VERSION", "load_model", "save_model")

import json
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final

from sehs.exceptions import SehsConfigError, SehsParseError, SehsStructureError
from sehs.knn import KnnModel
from sehs.lstm import LstmSpec, LstmWeights
from sehs.training import Classifier, KnnClassifier, LstmClassifier, ModelKind
from sehs.utils import atomic_write_text

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Mapping

MODEL_FORMAT: Final = "sehs-model"
MODEL_VERSION: Final = 1


def _document(model: Classifier) -> dict[str, Any]:
    if isinstance(model, KnnClassifier):
        spec = {"sample_rate_hz": model.sample_rate_hz}
        payload = model.model.to_payload()
    elif isinstance(model, LstmClassifier):
        spec = model.spec.to_payload()
        payload = model.weights.to_payload()
    else:
        msg = f"Cannot store a model of type {type(model).__name__}"
        raise TypeError(msg)
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind.value,
        "spec": spec,
        "payload": payload,
    }


def save_model(model: Classifier, path: Path | str) -> None:
    """Write a trained classifier to a JSON model file (atomically)."""
    atomic_write_text(path, json.dumps(_document(model)) + "\n")


def _classifier(document: Mapping[str, Any], path: Path) -> Classifier:
    kind = ModelKind(document["kind"])
    spec = document["spec"]
    payload = document["payload"]
    if kind is ModelKind.KNN:
        return KnnClassifier(
            model=KnnModel.from_payload(payload),
            sample_rate_hz=float(spec["sample_rate_hz"]),
        )
    lstm_spec = LstmSpec(**spec)
    if lstm_spec.direction is not kind.direction:
        msg = f"Model file {path} declares {kind.value} with a {spec} network"
        raise SehsParseError(msg)
    weights = LstmWeights.from_payload(payload)
    weights.check(lstm_spec)
    return LstmClassifier(spec=lstm_spec, weights=weights)


def load_model(path: Path | str) -> Classifier:
    """Read a classifier written by `save_model`.

    Raises:
        SehsParseError: If the file is not valid JSON, is not a model file of a
            supported version, or its content does not describe a model.
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        msg = f"Malformed model file {path}: {e.msg}"
        raise SehsParseError(msg, line=e.lineno, column=e.colno) from e
    if not isinstance(document, dict) or document.get("format") != MODEL_FORMAT:
        msg = f"{path} is not a {MODEL_FORMAT} file"
        raise SehsParseError(msg)
    if document.get("version") != MODEL_VERSION:
        msg = f"Unsupported model file version {document.get('version')!r} in {path}"
        raise SehsParseError(msg)
    try:
        return _classifier(document, path)
    except (
        KeyError, TypeError, ValueError, SehsConfigError, SehsStructureError
    ) as e:
        msg = f"Model file {path} is invalid: {e}"
        raise SehsParseError(msg) from e
