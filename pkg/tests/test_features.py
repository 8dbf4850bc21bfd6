"""Tests for cycle features."""

from __future__ import annotations

import numpy as np
import pytest

from sehs.exceptions import SehsInputError, SehsStructureError
from sehs.features import FEATURE_NAMES, FeatureVector, extract_features, feature_matrix

FS = 100.0


def _tone(freq_hz: float, n: int = 100, amplitude: float = 1.0) -> np.ndarray:
    return amplitude * np.sin(2 * np.pi * freq_hz * np.arange(n) / FS)


class TestExtractFeatures:
    """Tests for extract_features()."""

    def test_names(self) -> None:
        """Eleven time-domain and eleven spectral features."""
        features = extract_features(_tone(3.0), FS)
        assert len(FEATURE_NAMES) == 22
        assert features.names == FEATURE_NAMES
        assert list(features.as_dict()) == list(FEATURE_NAMES)

    def test_tone(self) -> None:
        """A whole number of periods of a sine has known features."""
        features = extract_features(_tone(3.0), FS)
        assert features["mean"] == pytest.approx(0.0, abs=1e-12)
        assert features["rms"] == pytest.approx(1 / np.sqrt(2))
        assert features["range"] == pytest.approx(
            features["max"] - features["min"]
        )
        assert features["dominant_freq"] == pytest.approx(3.0)
        assert features["dominant_mag"] == pytest.approx(50.0)
        assert features["spectral_centroid"] == pytest.approx(3.0)
        assert features["spectral_entropy"] == pytest.approx(0.0, abs=1e-6)
        assert features["spectral_rolloff"] == pytest.approx(3.0)
        assert features["stride_band_ratio"] == pytest.approx(1.0)
        assert features["zero_crossing_rate"] == pytest.approx(6 / 99, abs=2 / 99)

    def test_upper_band_tone(self) -> None:
        """A 5 Hz tone has no stride-band power."""
        features = extract_features(_tone(5.0), FS)
        assert features["dominant_freq"] == pytest.approx(5.0)
        assert features["stride_band_ratio"] == pytest.approx(0.0, abs=1e-12)

    def test_two_tones(self) -> None:
        """The weaker tone is the second dominant frequency."""
        features = extract_features(_tone(2.0) + _tone(7.0, amplitude=0.5), FS)
        assert features["dominant_freq"] == pytest.approx(2.0)
        assert features["second_dominant_freq"] == pytest.approx(7.0)
        assert 2.0 < features["spectral_centroid"] < 7.0

    def test_second_peak_past_leakage(self) -> None:
        """Leakage around an off-bin tone does not hide a weaker tone."""
        features = extract_features(_tone(2.5) + _tone(8.0, amplitude=0.25), FS)
        assert round(features["dominant_freq"]) in {2, 3}
        assert features["second_dominant_freq"] == pytest.approx(8.0)

    def test_constant(self) -> None:
        """A constant cycle has finite, mostly zero features."""
        features = extract_features(np.full(50, 2.0), FS)
        assert features["mean"] == 2.0
        assert features["std"] == 0.0
        assert features["skewness"] == 0.0
        assert features["kurtosis"] == 0.0
        assert features["spectral_energy"] == 0.0
        assert np.all(np.isfinite(features.values))

    def test_scale_invariant_shape(self) -> None:
        """Scaling a cycle leaves the spectral shape unchanged."""
        x = _tone(2.0) + 0.3 * _tone(4.0)
        small = extract_features(x, FS)
        large = extract_features(10 * x, FS)
        for name in ("spectral_centroid", "spectral_spread", "spectral_entropy"):
            assert large[name] == pytest.approx(small[name])
        assert large["spectral_energy"] == pytest.approx(100 * small["spectral_energy"])

    @pytest.mark.parametrize(
        ("cycle", "rate", "match"),
        [
            (np.zeros(7), FS, "at least 8"),
            (np.array([0.0] * 9 + [np.nan]), FS, "non-finite"),
            (np.zeros(10), 0.0, "positive"),
        ],
    )
    def test_invalid(self, cycle: np.ndarray, rate: float, match: str) -> None:
        """Short, non-finite and badly sampled cycles are rejected."""
        with pytest.raises(SehsInputError, match=match):
            extract_features(cycle, rate)


class TestFeatureVector:
    """Tests for FeatureVector."""

    def test_wrong_length(self) -> None:
        """Exactly 22 values are required."""
        with pytest.raises(SehsStructureError, match="22 features"):
            FeatureVector(np.zeros(21))

    def test_not_finite(self) -> None:
        """Infinite values are rejected."""
        values = np.zeros(22)
        values[3] = np.inf
        with pytest.raises(SehsStructureError, match="finite"):
            FeatureVector(values)

    def test_read_only(self) -> None:
        """Values cannot be changed in place."""
        features = extract_features(_tone(1.0), FS)
        with pytest.raises(ValueError, match="read-only"):
            features.values[0] = 1.0


class TestFeatureMatrix:
    """Tests for feature_matrix()."""

    def test_rows(self) -> None:
        """One row per cycle."""
        matrix = feature_matrix([_tone(1.0), _tone(2.0), _tone(3.0)], FS)
        assert matrix.shape == (3, 22)
        assert matrix[2, FEATURE_NAMES.index("dominant_freq")] == pytest.approx(3.0)

    def test_empty(self) -> None:
        """No cycles give an empty matrix with 22 columns."""
        assert feature_matrix([], FS).shape == (0, 22)
