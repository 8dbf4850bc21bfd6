"""Tests for the KNN classifier."""

from __future__ import annotations

import numpy as np
import pytest
from sklearn.neighbors import KNeighborsClassifier
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from sehs.exceptions import SehsInputError, SehsStructureError
from sehs.knn import KnnModel, knn_classify

from .oracles import knn_brute_force


def _blobs(seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], 30)
    features = rng.normal(size=(60, 4)) * [1.0, 5.0, 0.1, 2.0]
    features[:, 0] += labels * 1.5
    return features, labels


class TestKnnModel:
    """Tests for KnnModel."""

    @pytest.mark.parametrize("k", [1, 3, 5, 9])
    def test_matches_sklearn(self, k: int) -> None:
        """Without ties, predictions match scikit-learn on z-scored features."""
        features, labels = _blobs(seed=k)
        queries = np.random.default_rng(100 + k).normal(size=(40, 4)) * 2
        reference = make_pipeline(
            StandardScaler(), KNeighborsClassifier(n_neighbors=k)
        ).fit(features, labels)
        model = KnnModel.fit(features, labels, k=k)
        assert model.predict(queries).tolist() == reference.predict(queries).tolist()

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_matches_brute_force(self, k: int) -> None:
        """Tied votes resolve exactly like an exhaustive search."""
        rng = np.random.default_rng(k)
        features = rng.integers(0, 4, size=(24, 2)).astype(float)
        labels = rng.integers(0, 3, size=24)
        model = KnnModel.fit(features, labels, k=k)
        for query in rng.uniform(0, 3, size=(30, 2)):
            scaled = (query - model.mean) / model.scale
            expected = knn_brute_force(model.points, model.labels, scaled, k)
            assert int(model.predict(query)[0]) == expected

    def test_tie_by_summed_distance(self) -> None:
        """A split vote goes to the closer class, not the smaller label."""
        features = np.array([[0.0], [1.0], [10.0], [11.0]])
        labels = np.array([1, 0, 2, 2])
        model = KnnModel.fit(features, labels, k=2)
        assert model.predict([[0.4]]).tolist() == [1]
        assert model.predict([[0.6]]).tolist() == [0]

    def test_zscore(self) -> None:
        """Training points are stored z-scored."""
        features, labels = _blobs(seed=0)
        model = KnnModel.fit(features, labels)
        assert np.allclose(model.points.mean(axis=0), 0.0)
        assert np.allclose(model.points.std(axis=0), 1.0)

    def test_constant_feature(self) -> None:
        """A constant feature does not produce NaN distances."""
        features = np.column_stack([np.arange(6.0), np.ones(6)])
        model = KnnModel.fit(features, [0, 0, 0, 1, 1, 1], k=3)
        assert model.scale[1] == 1.0
        assert model.predict([[5.0, 1.0]]).tolist() == [1]

    def test_k_too_large(self) -> None:
        """k cannot exceed the training set."""
        with pytest.raises(SehsInputError, match=r"k must be in \[1, 3\]"):
            KnnModel.fit(np.zeros((3, 2)), [0, 1, 2], k=4)

    def test_empty(self) -> None:
        """An empty training set is rejected."""
        with pytest.raises(SehsInputError, match="non-empty"):
            KnnModel.fit(np.empty((0, 3)), [], k=1)

    def test_query_width(self) -> None:
        """Queries must have the training feature count."""
        model = KnnModel.fit(np.eye(3), [0, 1, 2], k=1)
        with pytest.raises(SehsStructureError, match="expects 3"):
            model.predict([[1.0, 2.0]])

    def test_label_count(self) -> None:
        """Points and labels must pair up."""
        with pytest.raises(SehsStructureError, match="labels"):
            KnnModel(
                mean=[0.0], scale=[1.0], points=[[0.0], [1.0]], labels=[0], k=1
            )

    def test_payload(self) -> None:
        """A payload rebuilds an equal model."""
        features, labels = _blobs(seed=1)
        model = KnnModel.fit(features, labels, k=4)
        assert KnnModel.from_payload(model.to_payload()) == model


def test_knn_classify() -> None:
    """The functional form returns one label."""
    features, labels = _blobs(seed=2)
    assert knn_classify(features, labels, features[0], k=1) == labels[0]
