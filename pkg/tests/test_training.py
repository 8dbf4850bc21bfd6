"""Tests for classifier training."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from sehs.exceptions import SehsConfigError, SehsInputError, SehsTrainingError
from sehs.lstm import Direction, LstmSpec
from sehs.models import Dataset, GaitCycle
from sehs.training import (
    Adam,
    KnnClassifier,
    LstmClassifier,
    ModelKind,
    TrainConfig,
    cross_validate,
    fit_lstm,
    lstm_train,
    stratified_folds,
    stratified_split,
    train_classifier,
)

if TYPE_CHECKING:
    from collections.abc import Callable

TOY = TrainConfig(
    batch_size=16, lr=0.01, patience=80, max_epochs=80, folds=3, seed=1
)


@pytest.fixture
def stride_dataset() -> Dataset:
    """Three subjects whose heel and toe peaks differ in timing and height."""
    rng = np.random.default_rng(3)
    phase = np.linspace(0.0, 1.0, 100)

    def stride(subject: int) -> np.ndarray:
        heel = (1.0 + 0.4 * subject) * np.exp(
            -(((phase - 0.15 - 0.1 * subject) / 0.06) ** 2)
        )
        toe = (0.8 - 0.2 * subject) * np.exp(-(((phase - 0.6) / 0.08) ** 2))
        scale = rng.normal(1.0, 0.05)
        return scale * (heel + toe) + rng.normal(0.0, 0.1, phase.size)

    cycles = [
        GaitCycle(samples=stride(subject), subject_id=subject)
        for subject in range(3)
        for _ in range(30)
    ]
    return Dataset.balanced(cycles, 30, 3)


class TestTrainConfig:
    """Tests for TrainConfig."""

    @pytest.mark.parametrize(
        "changes",
        [{"split": 1.0}, {"val_fraction": 0.0}, {"folds": 1}, {"lr": 0.0}],
    )
    def test_invalid(self, changes: dict[str, float]) -> None:
        """Broken protocols are configuration errors."""
        with pytest.raises(SehsConfigError):
            TrainConfig(**changes)  # type: ignore[arg-type]


class TestAdam:
    """Tests for the Adam optimizer."""

    def test_first_step(self) -> None:
        """The bias-corrected first step moves every weight by about lr."""
        params = {"w": np.array([1.0, -2.0])}
        Adam(lr=0.1).step(params, {"w": np.array([4.0, -0.5])})
        assert params["w"] == pytest.approx([0.9, -1.9])

    def test_minimizes_quadratic(self) -> None:
        """Repeated steps reach the minimum of a quadratic."""
        params = {"w": np.array([3.0, -4.0])}
        optimizer = Adam(lr=0.05)
        for _ in range(2000):
            optimizer.step(params, {"w": 2 * (params["w"] - 1.0)})
        assert params["w"] == pytest.approx([1.0, 1.0], abs=1e-2)
        assert optimizer.steps == 2000


class TestSplits:
    """Tests for the stratified splits."""

    def test_split(self) -> None:
        """Every class contributes the same fraction to training."""
        labels = np.repeat([0, 1, 2], 10)
        train, test = stratified_split(labels, 0.8, seed=0)
        assert len(train) == 24
        assert set(train).isdisjoint(test)
        assert np.bincount(labels[train]).tolist() == [8, 8, 8]
        again, _ = stratified_split(labels, 0.8, seed=0)
        assert again.tolist() == train.tolist()

    def test_folds_cover(self) -> None:
        """Held-out parts are disjoint and cover every index."""
        labels = np.repeat([0, 1], 10)
        folds = stratified_folds(labels, 5, seed=0)
        held = np.concatenate([h for _, h in folds])
        assert sorted(held.tolist()) == list(range(20))
        for train, held_part in folds:
            assert set(train).isdisjoint(held_part)
            assert np.bincount(labels[held_part]).tolist() == [2, 2]


class TestFitLstm:
    """Tests for fit_lstm() and lstm_train()."""

    def test_toy_levels(self, make_dataset: Callable[..., Dataset]) -> None:
        """Three constant levels are told apart."""
        dataset = make_dataset(n_subjects=3, per_subject=60)
        spec = LstmSpec(hidden_units=8, input_len=32, n_classes=3)
        result = lstm_train(spec, dataset, TOY)
        assert result.report.macro_recall >= 0.9
        history = result.history
        assert len(history.epochs) == 80
        assert not history.stopped_early
        assert history.best_val_loss == min(r.val_loss for r in history.epochs)

    def test_early_stopping(self, make_dataset: Callable[..., Dataset]) -> None:
        """Training ends `patience` epochs after the best one."""
        dataset = make_dataset(n_subjects=2, per_subject=20, length=8)
        spec = LstmSpec(hidden_units=2, input_len=8, n_classes=2)
        cfg = TrainConfig(batch_size=8, lr=0.05, patience=2, max_epochs=100)
        history = lstm_train(spec, dataset, cfg).history
        if history.stopped_early:
            assert len(history.epochs) == history.best_epoch + 2
        else:
            assert len(history.epochs) == 100

    def test_non_finite_loss(self) -> None:
        """A NaN loss stops training with the failing epoch."""
        spec = LstmSpec(hidden_units=2, input_len=4, n_classes=2)
        x = np.full((4, 4), np.nan)
        y = np.array([0, 1, 0, 1])
        with pytest.raises(SehsTrainingError, match="not finite") as excinfo:
            fit_lstm(spec, x, y, x, y, TOY)
        assert excinfo.value.epoch == 1

    def test_deterministic(self, make_dataset: Callable[..., Dataset]) -> None:
        """The same seed trains the same weights."""
        dataset = make_dataset(n_subjects=2, per_subject=20, length=8)
        spec = LstmSpec(hidden_units=2, input_len=8, n_classes=2)
        cfg = TrainConfig(batch_size=8, max_epochs=3)
        first = lstm_train(spec, dataset, cfg)
        second = lstm_train(spec, dataset, cfg)
        assert first.weights == second.weights

    def test_unbalanced(self) -> None:
        """Training requires a balanced dataset."""
        cycles = [GaitCycle(samples=[0.0, 1.0], subject_id=s) for s in (0, 1)]
        with pytest.raises(SehsInputError, match="balanced"):
            lstm_train(LstmSpec(n_classes=2, input_len=2), Dataset(cycles, 2), TOY)


class TestTrainClassifier:
    """Tests for train_classifier() and cross_validate()."""

    def test_knn(self, stride_dataset: Dataset) -> None:
        """KNN separates subjects by the features of their strides."""
        model, report = train_classifier(ModelKind.KNN, stride_dataset, TOY, k=5)
        assert isinstance(model, KnnClassifier)
        assert model.kind is ModelKind.KNN
        assert report.accuracy >= 0.9
        assert int(report.confusion.sum()) == 18

    def test_unilstm(self, make_dataset: Callable[..., Dataset]) -> None:
        """Recurrent kinds build a network of the matching direction."""
        dataset = make_dataset(n_subjects=2, per_subject=20, length=8)
        cfg = TrainConfig(batch_size=8, max_epochs=2)
        model, _ = train_classifier(
            ModelKind.UNILSTM, dataset, cfg, hidden_units=3
        )
        assert isinstance(model, LstmClassifier)
        assert model.spec.direction is Direction.UNI
        assert model.kind is ModelKind.UNILSTM
        assert model.predict(dataset.matrix()).shape == (40,)

    def test_cross_validate(self, stride_dataset: Dataset) -> None:
        """One report per fold, pooled over the training part."""
        result = cross_validate(ModelKind.KNN, stride_dataset, TOY, k=3)
        assert len(result.folds) == 3
        assert int(result.summary.confusion.sum()) == 72
        assert result.summary.accuracy >= 0.9
        assert result.summary.recall_std >= 0.0

    def test_model_kinds(self) -> None:
        """Only the bidirectional kind reads both ways."""
        assert ModelKind.BILSTM.direction is Direction.BI
        assert ModelKind.UNILSTM.direction is Direction.UNI
        assert ModelKind("knn") is ModelKind.KNN
