"""Recurrent gait classifiers.

A gait cycle is fed one sample per time step into an LSTM cell. The final
hidden state goes through a dense layer and a softmax. The bidirectional
variant runs a second cell over the reversed cycle and concatenates both final
hidden states before the dense layer.

Gates are stacked in the order input, forget, output, candidate; each cell
multiplies the concatenation `[x_t, h_{t-1}]` by one weight matrix.
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "Direction",
    "LstmSpec",
    "LstmWeights",
    "batch_loss",
    "init_weights",
    "loss_and_grads",
    "lstm_forward",
    "predict_proba",
    "softmax",
)

from enum import Enum
from typing import TYPE_CHECKING, Any, NamedTuple

import attrs
import numpy as np
from scipy.special import expit, logsumexp

from sehs.exceptions import SehsConfigError, SehsStructureError
from sehs.utils import make_rng

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray

FORGET_BIAS = 1.0


class Direction(Enum):
    """Direction the cycle is read in."""

    UNI = "Uni"
    BI = "Bi"


@attrs.frozen
class LstmSpec:
    """Network shape.

    Attributes:
        hidden_units: Hidden units per cell.
        direction: Unidirectional or bidirectional.
        input_len: Cycle length the network accepts.
        n_classes: Number of output classes.
    """

    hidden_units: int = 32
    direction: Direction = attrs.field(default=Direction.BI, converter=Direction)
    input_len: int = 130
    n_classes: int = 20

    def __attrs_post_init__(self) -> None:
        """Check sizes."""
        if self.hidden_units < 1:
            msg = f"hidden_units must be at least 1, got {self.hidden_units}"
            raise SehsConfigError(msg)
        if self.n_classes < 2:  # noqa: PLR2004
            msg = f"n_classes must be at least 2, got {self.n_classes}"
            raise SehsConfigError(msg)
        if self.input_len < 1:
            msg = f"input_len must be at least 1, got {self.input_len}"
            raise SehsConfigError(msg)

    @property
    def cells(self) -> tuple[str, ...]:
        """Names of the recurrent cells."""
        return ("fwd", "bwd") if self.direction is Direction.BI else ("fwd",)

    @property
    def dense_inputs(self) -> int:
        """Width of the dense layer input."""
        return self.hidden_units * len(self.cells)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Expected shape of every parameter."""
        h = self.hidden_units
        shapes: dict[str, tuple[int, ...]] = {}
        for cell in self.cells:
            shapes[f"{cell}.w"] = (1 + h, 4 * h)
            shapes[f"{cell}.b"] = (4 * h,)
        shapes["dense.w"] = (self.dense_inputs, self.n_classes)
        shapes["dense.b"] = (self.n_classes,)
        return shapes

    def to_payload(self) -> dict[str, Any]:
        """JSON-compatible representation."""
        return {
            "hidden_units": self.hidden_units,
            "direction": self.direction.value,
            "input_len": self.input_len,
            "n_classes": self.n_classes,
        }


def _as_params(params: dict[str, ArrayLike]) -> dict[str, NDArray[np.float64]]:
    return {name: np.array(value, dtype=np.float64) for name, value in params.items()}


def _params_eq(
    a: dict[str, NDArray[np.float64]], b: dict[str, NDArray[np.float64]]
) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


@attrs.frozen
class LstmWeights:
    """Network parameters and input normalization.

    Attributes:
        params: Parameter name to array; see `LstmSpec.shapes`.
        input_mean: Subtracted from every input sample.
        input_scale: Divides every centred input sample.
    """

    params: dict[str, NDArray[np.float64]] = attrs.field(
        converter=_as_params, eq=attrs.cmp_using(eq=_params_eq)
    )
    input_mean: float = 0.0
    input_scale: float = 1.0

    def check(self, spec: LstmSpec) -> None:
        """Raise if the parameters do not fit `spec`."""
        expected = spec.shapes()
        actual = {name: value.shape for name, value in self.params.items()}
        if actual != expected:
            msg = f"Weights {actual} do not match the network shape {expected}"
            raise SehsStructureError(msg)

    def copy(self) -> LstmWeights:
        """Deep copy."""
        return attrs.evolve(self, params={k: v.copy() for k, v in self.params.items()})

    def to_payload(self) -> dict[str, Any]:
        """JSON-compatible representation."""
        return {
            "input_mean": self.input_mean,
            "input_scale": self.input_scale,
            "params": {name: value.tolist() for name, value in self.params.items()},
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> LstmWeights:
        """Inverse of `to_payload`."""
        return cls(
            params=payload["params"],
            input_mean=float(payload["input_mean"]),
            input_scale=float(payload["input_scale"]),
        )


def init_weights(
    spec: LstmSpec,
    seed: int,
    *,
    input_mean: float = 0.0,
    input_scale: float = 1.0,
) -> LstmWeights:
    """Uniform weights in ±1/sqrt(hidden_units), zero biases, forget-gate bias 1."""
    rng = make_rng(seed)
    h = spec.hidden_units
    bound = 1.0 / np.sqrt(h)
    params: dict[str, NDArray[np.float64]] = {}
    for name, shape in spec.shapes().items():
        if name.endswith(".w"):
            params[name] = rng.uniform(-bound, bound, shape)
        else:
            params[name] = np.zeros(shape)
    for cell in spec.cells:
        params[f"{cell}.b"][h : 2 * h] = FORGET_BIAS
    return LstmWeights(params=params, input_mean=input_mean, input_scale=input_scale)


def softmax(logits: ArrayLike) -> NDArray[np.float64]:
    """Row-wise softmax, shifted by the row maximum."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = np.exp(z - z.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


class _CellCache(NamedTuple):
    inputs: NDArray[np.float64]  # (T, B, 1 + H)
    gates: NDArray[np.float64]  # (T, B, 4H), activated
    cells: NDArray[np.float64]  # (T, B, H)
    cells_tanh: NDArray[np.float64]  # (T, B, H)


def _cell_forward(
    w: NDArray[np.float64], b: NDArray[np.float64], xs: NDArray[np.float64]
) -> tuple[NDArray[np.float64], _CellCache]:
    steps, batch = xs.shape
    h_units = b.shape[0] // 4
    inputs = np.zeros((steps, batch, 1 + h_units))
    gates = np.zeros((steps, batch, 4 * h_units))
    cells = np.zeros((steps, batch, h_units))
    cells_tanh = np.zeros((steps, batch, h_units))
    h = np.zeros((batch, h_units))
    c = np.zeros((batch, h_units))
    for t in range(steps):
        inputs[t, :, 0] = xs[t]
        inputs[t, :, 1:] = h
        z = inputs[t] @ w + b
        gates[t, :, : 3 * h_units] = expit(z[:, : 3 * h_units])
        gates[t, :, 3 * h_units :] = np.tanh(z[:, 3 * h_units :])
        i, f, o, g = np.split(gates[t], 4, axis=1)
        c = f * c + i * g
        cells[t] = c
        cells_tanh[t] = np.tanh(c)
        h = o * cells_tanh[t]
    return h, _CellCache(inputs, gates, cells, cells_tanh)


def _cell_backward(
    w: NDArray[np.float64], cache: _CellCache, dh_final: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    steps, batch, _ = cache.inputs.shape
    h_units = cache.cells.shape[2]
    dw = np.zeros_like(w)
    db = np.zeros(w.shape[1])
    dh = dh_final
    dc = np.zeros((batch, h_units))
    for t in reversed(range(steps)):
        i, f, o, g = np.split(cache.gates[t], 4, axis=1)
        c_prev = cache.cells[t - 1] if t > 0 else np.zeros((batch, h_units))
        d_o = dh * cache.cells_tanh[t]
        dc = dc + dh * o * (1.0 - cache.cells_tanh[t] ** 2)
        d_i = dc * g
        d_f = dc * c_prev
        d_g = dc * i
        dz = np.concatenate(
            [
                d_i * i * (1.0 - i),
                d_f * f * (1.0 - f),
                d_o * o * (1.0 - o),
                d_g * (1.0 - g**2),
            ],
            axis=1,
        )
        dw += cache.inputs[t].T @ dz
        db += dz.sum(axis=0)
        dh = (dz @ w.T)[:, 1:]
        dc = dc * f
    return dw, db


def _sequences(
    spec: LstmSpec, weights: LstmWeights, batch: ArrayLike
) -> NDArray[np.float64]:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_len:  # noqa: PLR2004
        msg = f"Expected cycles of length {spec.input_len}, got shape {x.shape}"
        raise SehsStructureError(msg)
    weights.check(spec)
    # Time-major.
    return ((x - weights.input_mean) / weights.input_scale).T


def _forward(
    spec: LstmSpec, weights: LstmWeights, batch: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64], dict[str, _CellCache]]:
    xs = _sequences(spec, weights, batch)
    p = weights.params
    finals: list[NDArray[np.float64]] = []
    caches: dict[str, _CellCache] = {}
    for cell in spec.cells:
        seq = xs if cell == "fwd" else xs[::-1]
        h, caches[cell] = _cell_forward(p[f"{cell}.w"], p[f"{cell}.b"], seq)
        finals.append(h)
    features = np.concatenate(finals, axis=1)
    logits = features @ p["dense.w"] + p["dense.b"]
    return logits, features, caches


def predict_proba(
    spec: LstmSpec, weights: LstmWeights, batch: ArrayLike
) -> NDArray[np.float64]:
    """Class probabilities for a batch of cycles, one row per cycle."""
    logits, _, _ = _forward(spec, weights, batch)
    return softmax(logits)


def lstm_forward(
    spec: LstmSpec, weights: LstmWeights, cycle: ArrayLike
) -> NDArray[np.float64]:
    """Class probabilities of one cycle.

    Raises:
        SehsStructureError: If the cycle length or the weights do not match
            `spec`.
    """
    x = np.asarray(cycle, dtype=np.float64)
    if x.ndim != 1:
        msg = f"Expected a 1-D cycle, got shape {x.shape}"
        raise SehsStructureError(msg)
    return predict_proba(spec, weights, x[np.newaxis, :])[0]


def loss_and_grads(
    spec: LstmSpec,
    weights: LstmWeights,
    batch: ArrayLike,
    labels: ArrayLike,
) -> tuple[float, dict[str, NDArray[np.float64]]]:
    """Mean cross-entropy of a batch and its gradient for every parameter."""
    y = np.asarray(labels, dtype=np.int64)
    logits, features, caches = _forward(spec, weights, batch)
    probs = softmax(logits)
    n = len(y)
    loss = float(np.mean(logsumexp(logits, axis=1) - logits[np.arange(n), y]))

    p = weights.params
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grads = {
        "dense.w": features.T @ dlogits,
        "dense.b": dlogits.sum(axis=0),
    }
    dfeatures = dlogits @ p["dense.w"].T
    h = spec.hidden_units
    for k, cell in enumerate(spec.cells):
        dw, db = _cell_backward(
            p[f"{cell}.w"], caches[cell], dfeatures[:, k * h : (k + 1) * h]
        )
        grads[f"{cell}.w"] = dw
        grads[f"{cell}.b"] = db
    return loss, grads


def batch_loss(
    spec: LstmSpec, weights: LstmWeights, batch: ArrayLike, labels: ArrayLike
) -> float:
    """Mean cross-entropy of a batch, without gradients."""
    y = np.asarray(labels, dtype=np.int64)
    logits, _, _ = _forward(spec, weights, batch)
    return float(np.mean(logsumexp(logits, axis=1) - logits[np.arange(len(y)), y]))
