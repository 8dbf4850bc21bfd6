"""Training and cross-validation of the gait classifiers."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "Adam",
    "Classifier",
    "CvResult",
    "EpochRecord",
    "KnnClassifier",
    "LstmClassifier",
    "ModelKind",
    "TrainConfig",
    "TrainHistory",
    "TrainResult",
    "cross_validate",
    "fit_knn",
    "fit_lstm",
    "lstm_train",
    "stratified_folds",
    "stratified_split",
    "train_classifier",
)

from enum import Enum
from typing import TYPE_CHECKING, NamedTuple, Protocol

import attrs
import numpy as np
from loguru import logger
from sklearn.model_selection import StratifiedKFold, train_test_split
from tqdm import tqdm

from sehs.exceptions import SehsConfigError, SehsInputError, SehsTrainingError
from sehs.features import feature_matrix
from sehs.knn import KnnModel
from sehs.lstm import (
    Direction,
    LstmSpec,
    LstmWeights,
    batch_loss,
    init_weights,
    loss_and_grads,
    predict_proba,
)
from sehs.metrics import EvalReport, evaluate, summarize_folds
from sehs.utils import between, make_rng, positive

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray

    from sehs.models import Dataset


@attrs.frozen
class TrainConfig:
    """Training protocol.

    Attributes:
        batch_size: Mini-batch size.
        lr: Adam step size.
        beta1: Adam first-moment decay.
        beta2: Adam second-moment decay.
        eps: Adam denominator offset.
        patience: Epochs without validation improvement before stopping.
        max_epochs: Upper bound on epochs.
        folds: Cross-validation folds.
        split: Fraction of every class used for training; the rest is the test
            set.
        val_fraction: Fraction of the training part held out for early
            stopping.
        seed: Seed of every split, shuffle and initialization.
    """

    batch_size: int = attrs.field(default=64, validator=positive())
    lr: float = attrs.field(default=1e-3, validator=positive())
    beta1: float = attrs.field(default=0.9, validator=between(0.0, 1.0))
    beta2: float = attrs.field(default=0.999, validator=between(0.0, 1.0))
    eps: float = attrs.field(default=1e-8, validator=positive())
    patience: int = attrs.field(default=10, validator=positive())
    max_epochs: int = attrs.field(default=200, validator=positive())
    folds: int = 5
    split: float = 0.8
    val_fraction: float = 0.1
    seed: int = 0

    def __attrs_post_init__(self) -> None:
        """Check the split layout."""
        if not 0 < self.split < 1:
            msg = f"split must be in (0, 1), got {self.split}"
            raise SehsConfigError(msg)
        if not 0 < self.val_fraction < 1:
            msg = f"val_fraction must be in (0, 1), got {self.val_fraction}"
            raise SehsConfigError(msg)
        if self.folds < 2:  # noqa: PLR2004
            msg = f"folds must be at least 2, got {self.folds}"
            raise SehsConfigError(msg)


@attrs.define
class Adam:
    """Adam optimizer over a dictionary of named parameters.

    Parameters are updated in place, in sorted name order.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    steps: int = 0
    first: dict[str, NDArray[np.float64]] = attrs.Factory(dict)
    second: dict[str, NDArray[np.float64]] = attrs.Factory(dict)

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> Adam:
        """Optimizer with the configured hyperparameters."""
        return cls(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)

    def step(
        self,
        params: dict[str, NDArray[np.float64]],
        grads: dict[str, NDArray[np.float64]],
    ) -> None:
        """Apply one bias-corrected update."""
        self.steps += 1
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for name in sorted(params):
            g = grads[name]
            m = self.first.setdefault(name, np.zeros_like(g))
            v = self.second.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g**2
            params[name] -= (
                self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            )


def stratified_split(
    labels: ArrayLike, train_fraction: float, seed: int
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Indices of a class-stratified train/test split."""
    y = np.asarray(labels, dtype=np.int64)
    train, test = train_test_split(
        np.arange(len(y)), train_size=train_fraction, stratify=y, random_state=seed
    )
    return np.asarray(train, dtype=np.int64), np.asarray(test, dtype=np.int64)


def stratified_folds(
    labels: ArrayLike, folds: int, seed: int
) -> list[tuple[NDArray[np.int64], NDArray[np.int64]]]:
    """Train and held-out indices of every stratified fold.

    The held-out parts are disjoint and together cover every index once.
    """
    y = np.asarray(labels, dtype=np.int64)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return [
        (np.asarray(train, dtype=np.int64), np.asarray(held, dtype=np.int64))
        for train, held in splitter.split(np.zeros(len(y)), y)
    ]


class ModelKind(Enum):
    """Classifier families."""

    KNN = "knn"
    UNILSTM = "unilstm"
    BILSTM = "bilstm"

    @property
    def direction(self) -> Direction:
        """Recurrent direction of an LSTM kind."""
        return Direction.BI if self is ModelKind.BILSTM else Direction.UNI


class Classifier(Protocol):
    """Anything that labels a matrix of cycles."""

    @property
    def kind(self) -> ModelKind:
        """Classifier family."""
        ...

    def predict(self, cycles: ArrayLike) -> NDArray[np.int64]:
        """One label per cycle (row)."""
        ...


@attrs.frozen
class LstmClassifier:
    """Trained recurrent classifier.

    Attributes:
        spec: Network shape.
        weights: Trained parameters.
    """

    spec: LstmSpec
    weights: LstmWeights

    @property
    def kind(self) -> ModelKind:
        """Classifier family."""
        if self.spec.direction is Direction.BI:
            return ModelKind.BILSTM
        return ModelKind.UNILSTM

    def predict(self, cycles: ArrayLike) -> NDArray[np.int64]:
        """Most probable class of every cycle."""
        probs = predict_proba(self.spec, self.weights, cycles)
        return np.argmax(probs, axis=1).astype(np.int64)


@attrs.frozen
class KnnClassifier:
    """KNN over the statistical features of a cycle.

    Attributes:
        model: Fitted KNN on feature vectors.
        sample_rate_hz: Rate the cycles are sampled at, for spectral features.
    """

    model: KnnModel
    sample_rate_hz: float

    @property
    def kind(self) -> ModelKind:
        """Classifier family."""
        return ModelKind.KNN

    def predict(self, cycles: ArrayLike) -> NDArray[np.int64]:
        """Vote of the nearest training cycles in feature space."""
        features = feature_matrix(np.asarray(cycles), self.sample_rate_hz)
        return self.model.predict(features)


class EpochRecord(NamedTuple):
    """Losses after one epoch."""

    epoch: int
    train_loss: float
    val_loss: float


@attrs.frozen
class TrainHistory:
    """Course of one training run.

    Attributes:
        epochs: Loss record of every completed epoch.
        best_epoch: Epoch whose weights were kept.
        stopped_early: Whether patience ran out before `max_epochs`.
    """

    epochs: tuple[EpochRecord, ...]
    best_epoch: int
    stopped_early: bool

    @property
    def best_val_loss(self) -> float:
        """Validation loss of the kept weights."""
        return self.epochs[self.best_epoch - 1].val_loss


class TrainResult(NamedTuple):
    """Trained weights, held-out report and training history."""

    weights: LstmWeights
    report: EvalReport
    history: TrainHistory


def _input_normalization(x: NDArray[np.float64]) -> tuple[float, float]:
    scale = float(x.std())
    return float(x.mean()), scale if scale > 0 else 1.0


def fit_lstm(  # noqa: PLR0913
    spec: LstmSpec,
    train_x: ArrayLike,
    train_y: ArrayLike,
    val_x: ArrayLike,
    val_y: ArrayLike,
    cfg: TrainConfig,
    *,
    progress: bool = False,
) -> tuple[LstmWeights, TrainHistory]:
    """Mini-batch Adam with early stopping on the validation loss.

    Returns the weights of the epoch with the lowest validation loss.

    Raises:
        SehsTrainingError: If the training loss stops being finite.
    """
    x = np.asarray(train_x, dtype=np.float64)
    y = np.asarray(train_y, dtype=np.int64)
    vx = np.asarray(val_x, dtype=np.float64)
    vy = np.asarray(val_y, dtype=np.int64)
    mean, scale = _input_normalization(x)
    weights = init_weights(spec, cfg.seed, input_mean=mean, input_scale=scale)
    optimizer = Adam.from_config(cfg)
    rng = make_rng(cfg.seed)

    best = weights.copy()
    best_loss = np.inf
    best_epoch = 0
    waited = 0
    records: list[EpochRecord] = []
    epochs = tqdm(range(1, cfg.max_epochs + 1), disable=not progress, unit="epoch")
    for epoch in epochs:
        order = rng.permutation(len(y))
        losses: list[float] = []
        for start in range(0, len(y), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grads(spec, weights, x[batch], y[batch])
            if not np.isfinite(loss):
                msg = "Training loss is not finite"
                raise SehsTrainingError(msg, epoch=epoch)
            optimizer.step(weights.params, grads)
            losses.append(loss * len(batch))
        train_loss = float(sum(losses) / len(y))
        val_loss = batch_loss(spec, weights, vx, vy)
        records.append(EpochRecord(epoch, train_loss, val_loss))

        if val_loss < best_loss:
            best, best_loss, best_epoch, waited = weights.copy(), val_loss, epoch, 0
            logger.debug(f"Epoch {epoch}: validation loss improved to {val_loss:.4f}.")
        else:
            waited += 1
            if waited >= cfg.patience:
                break

    stopped_early = len(records) < cfg.max_epochs
    logger.info(
        f"Training stopped after {len(records)} epochs; best epoch {best_epoch} "
        f"(validation loss {best_loss:.4f})."
    )
    history = TrainHistory(
        epochs=tuple(records), best_epoch=best_epoch, stopped_early=stopped_early
    )
    return best, history


def _validation_split(
    labels: NDArray[np.int64], indices: NDArray[np.int64], cfg: TrainConfig
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    fit, val = train_test_split(
        indices,
        test_size=cfg.val_fraction,
        stratify=labels[indices],
        random_state=cfg.seed + 1,
    )
    return np.asarray(fit, dtype=np.int64), np.asarray(val, dtype=np.int64)


def _check_trainable(dataset: Dataset) -> None:
    if dataset.cycles_per_subject == 0:
        msg = "Training needs a balanced dataset"
        raise SehsInputError(msg)


def lstm_train(
    spec: LstmSpec,
    dataset: Dataset,
    cfg: TrainConfig,
    *,
    progress: bool = False,
) -> TrainResult:
    """Train on a stratified split and report on the held-out part.

    A validation part is carved from the training part for early stopping.
    """
    _check_trainable(dataset)
    x = dataset.matrix()
    y = dataset.labels()
    train, test = stratified_split(y, cfg.split, cfg.seed)
    fit, val = _validation_split(y, train, cfg)
    weights, history = fit_lstm(
        spec, x[fit], y[fit], x[val], y[val], cfg, progress=progress
    )
    model = LstmClassifier(spec=spec, weights=weights)
    report = evaluate(y[test], model.predict(x[test]), spec.n_classes)
    return TrainResult(weights=weights, report=report, history=history)


def fit_knn(
    train_x: ArrayLike, train_y: ArrayLike, sample_rate_hz: float, k: int = 10
) -> KnnClassifier:
    """KNN over the features of the training cycles."""
    features = feature_matrix(np.asarray(train_x), sample_rate_hz)
    return KnnClassifier(
        model=KnnModel.fit(features, train_y, k), sample_rate_hz=sample_rate_hz
    )


def _fit(  # noqa: PLR0913
    kind: ModelKind,
    dataset: Dataset,
    fit_idx: NDArray[np.int64],
    cfg: TrainConfig,
    *,
    sample_rate_hz: float,
    hidden_units: int,
    k: int,
    progress: bool,
) -> Classifier:
    x = dataset.matrix()
    y = dataset.labels()
    if kind is ModelKind.KNN:
        return fit_knn(x[fit_idx], y[fit_idx], sample_rate_hz, k)
    spec = LstmSpec(
        hidden_units=hidden_units,
        direction=kind.direction,
        input_len=x.shape[1],
        n_classes=dataset.n_subjects,
    )
    fit, val = _validation_split(y, fit_idx, cfg)
    weights, _ = fit_lstm(spec, x[fit], y[fit], x[val], y[val], cfg, progress=progress)
    return LstmClassifier(spec=spec, weights=weights)


def train_classifier(  # noqa: PLR0913
    kind: ModelKind,
    dataset: Dataset,
    cfg: TrainConfig,
    *,
    sample_rate_hz: float = 100.0,
    hidden_units: int = 32,
    k: int = 10,
    progress: bool = False,
) -> tuple[Classifier, EvalReport]:
    """Train any classifier family on the split and report on the test part."""
    _check_trainable(dataset)
    y = dataset.labels()
    train, test = stratified_split(y, cfg.split, cfg.seed)
    model = _fit(
        kind,
        dataset,
        train,
        cfg,
        sample_rate_hz=sample_rate_hz,
        hidden_units=hidden_units,
        k=k,
        progress=progress,
    )
    predicted = model.predict(dataset.matrix()[test])
    report = evaluate(y[test], predicted, dataset.n_subjects)
    logger.info(
        f"{kind.value}: macro recall {report.macro_recall:.3f}, "
        f"macro precision {report.macro_precision:.3f}."
    )
    return model, report


class CvResult(NamedTuple):
    """Per-fold reports and their pooled summary."""

    folds: list[EvalReport]
    summary: EvalReport


def cross_validate(  # noqa: PLR0913
    kind: ModelKind,
    dataset: Dataset,
    cfg: TrainConfig,
    *,
    sample_rate_hz: float = 100.0,
    hidden_units: int = 32,
    k: int = 10,
    progress: bool = False,
) -> CvResult:
    """Stratified k-fold cross-validation inside the training part."""
    _check_trainable(dataset)
    x = dataset.matrix()
    y = dataset.labels()
    train, _ = stratified_split(y, cfg.split, cfg.seed)
    reports: list[EvalReport] = []
    folds = stratified_folds(y[train], cfg.folds, cfg.seed)
    for fold_train, fold_held in tqdm(folds, disable=not progress, unit="fold"):
        model = _fit(
            kind,
            dataset,
            train[fold_train],
            cfg,
            sample_rate_hz=sample_rate_hz,
            hidden_units=hidden_units,
            k=k,
            progress=False,
        )
        held = train[fold_held]
        reports.append(evaluate(y[held], model.predict(x[held]), dataset.n_subjects))
    summary = summarize_folds(reports)
    logger.info(
        f"{kind.value} {cfg.folds}-fold: macro recall {summary.macro_recall:.3f} "
        f"± {summary.recall_std:.3f}."
    )
    return CvResult(folds=reports, summary=summary)
