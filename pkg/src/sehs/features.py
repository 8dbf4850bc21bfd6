"""Statistical features of gait cycles.

Eleven time-domain and eleven frequency-domain features, in this order:

| # | Name | Definition |
|---|---|---|
| 0 | `mean` | Sample mean. |
| 1 | `std` | Population standard deviation. |
| 2 | `variance` | Population variance. |
| 3 | `rms` | Root mean square. |
| 4 | `min` | Minimum. |
| 5 | `max` | Maximum. |
| 6 | `range` | `max - min`. |
| 7 | `skewness` | Fisher skewness (0 for a constant cycle). |
| 8 | `kurtosis` | Excess kurtosis (0 for a constant cycle). |
| 9 | `zero_crossing_rate` | Sign changes about the mean, per sample pair. |
| 10 | `mean_abs_diff` | Mean absolute first difference. |
| 11 | `spectral_energy` | Sum of squared magnitudes over the sample count. |
| 12 | `spectral_entropy` | Shannon entropy of the normalized power spectrum. |
| 13 | `spectral_centroid` | Power-weighted mean frequency. |
| 14 | `spectral_spread` | Power-weighted standard deviation of frequency. |
| 15 | `dominant_freq` | Frequency of the largest magnitude. |
| 16 | `dominant_mag` | Largest magnitude. |
| 17 | `second_dominant_freq` | Largest other local spectral maximum (0 if none). |
| 18 | `stride_band_ratio` | Power in [0.5, 3] Hz over power in [0.5, 10] Hz. |
| 19 | `spectral_skewness` | Third standardized moment of the power spectrum. |
| 20 | `spectral_kurtosis` | Fourth standardized moment of the power spectrum. |
| 21 | `spectral_rolloff` | Lowest frequency below which 85% of the power lies. |

The spectrum is the one-sided magnitude spectrum of the mean-removed cycle,
without the DC bin.
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "FEATURE_NAMES",
    "FeatureVector",
    "extract_features",
    "feature_matrix",
)

from typing import TYPE_CHECKING, Final

import attrs
import numpy as np
from scipy import signal, stats

from sehs.exceptions import SehsInputError, SehsStructureError

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterable

    from numpy.typing import ArrayLike, NDArray

FEATURE_NAMES: Final = (
    "mean",
    "std",
    "variance",
    "rms",
    "min",
    "max",
    "range",
    "skewness",
    "kurtosis",
    "zero_crossing_rate",
    "mean_abs_diff",
    "spectral_energy",
    "spectral_entropy",
    "spectral_centroid",
    "spectral_spread",
    "dominant_freq",
    "dominant_mag",
    "second_dominant_freq",
    "stride_band_ratio",
    "spectral_skewness",
    "spectral_kurtosis",
    "spectral_rolloff",
)
MIN_CYCLE_LEN: Final = 8
STRIDE_BAND_HZ: Final = (0.5, 3.0)
UPPER_BAND_HZ: Final = (3.0, 10.0)
ROLLOFF: Final = 0.85


def _as_values(values: ArrayLike) -> NDArray[np.float64]:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@attrs.frozen
class FeatureVector:
    """The 22 features of one cycle.

    Attributes:
        values: Feature values, ordered as `FEATURE_NAMES`.
    """

    values: NDArray[np.float64] = attrs.field(
        converter=_as_values, eq=attrs.cmp_using(eq=np.array_equal)
    )

    @values.validator
    def _check_values(
        self, _attribute: attrs.Attribute[object], value: NDArray[np.float64]
    ) -> None:
        if value.shape != (len(FEATURE_NAMES),):
            msg = f"Expected {len(FEATURE_NAMES)} features, got shape {value.shape}"
            raise SehsStructureError(msg)
        if not np.all(np.isfinite(value)):
            msg = "Features must be finite"
            raise SehsStructureError(msg)

    @property
    def names(self) -> tuple[str, ...]:
        """Feature names."""
        return FEATURE_NAMES

    def __getitem__(self, name: str) -> float:
        """Value of a named feature."""
        return float(self.values[FEATURE_NAMES.index(name)])

    def as_dict(self) -> dict[str, float]:
        """Feature name to value."""
        return dict(zip(FEATURE_NAMES, self.values.tolist(), strict=True))


def _moments(
    freqs: NDArray[np.float64], weights: NDArray[np.float64]
) -> tuple[float, float, float, float]:
    """Centroid, spread, skewness and kurtosis of a weighted distribution."""
    centroid = float(np.sum(freqs * weights))
    spread = float(np.sqrt(np.sum((freqs - centroid) ** 2 * weights)))
    if spread == 0:
        return centroid, 0.0, 0.0, 0.0
    z = (freqs - centroid) / spread
    return (
        centroid,
        spread,
        float(np.sum(z**3 * weights)),
        float(np.sum(z**4 * weights)),
    )


def _band_power(
    freqs: NDArray[np.float64], power: NDArray[np.float64], band: tuple[float, float]
) -> float:
    low, high = band
    return float(power[(freqs >= low) & (freqs <= high)].sum())


def _time_features(x: NDArray[np.float64]) -> list[float]:
    mean = float(x.mean())
    variance = float(x.var())
    centered = x - mean
    if np.ptp(x) == 0:
        skewness = kurtosis = 0.0
    else:
        skewness = float(stats.skew(x))
        kurtosis = float(stats.kurtosis(x))
    above = centered >= 0
    return [
        mean,
        float(np.sqrt(variance)),
        variance,
        float(np.sqrt(np.mean(x**2))),
        float(x.min()),
        float(x.max()),
        float(np.ptp(x)),
        skewness,
        kurtosis,
        float(np.mean(above[1:] != above[:-1])),
        float(np.mean(np.abs(np.diff(x)))),
    ]


def _spectral_features(x: NDArray[np.float64], sample_rate_hz: float) -> list[float]:
    magnitude = np.abs(np.fft.rfft(x - x.mean()))[1:]
    freqs = np.fft.rfftfreq(x.size, d=1.0 / sample_rate_hz)[1:]
    power = magnitude**2
    total = float(power.sum())
    if total == 0:
        return [0.0] * 11

    weights = power / total
    nonzero = weights[weights > 0]
    entropy = float(-np.sum(nonzero * np.log2(nonzero)))
    centroid, spread, skewness, kurtosis = _moments(freqs, weights)

    dominant = int(np.argmax(magnitude))
    # Leakage shoulders of the dominant peak are not peaks of their own.
    peaks, _ = signal.find_peaks(magnitude)
    peaks = peaks[peaks != dominant]
    second_freq = (
        float(freqs[peaks[np.argmax(magnitude[peaks])]]) if peaks.size else 0.0
    )

    stride = _band_power(freqs, power, STRIDE_BAND_HZ)
    upper = _band_power(freqs, power, UPPER_BAND_HZ)
    # Shared 3 Hz bin counts once.
    overlap = _band_power(freqs, power, (UPPER_BAND_HZ[0], STRIDE_BAND_HZ[1]))
    combined = stride + upper - overlap
    rolloff_index = int(np.searchsorted(np.cumsum(weights), ROLLOFF))

    return [
        total / x.size,
        entropy,
        centroid,
        spread,
        float(freqs[dominant]),
        float(magnitude[dominant]),
        second_freq,
        stride / combined if combined > 0 else 0.0,
        skewness,
        kurtosis,
        float(freqs[min(rolloff_index, freqs.size - 1)]),
    ]


def extract_features(cycle: ArrayLike, sample_rate_hz: float) -> FeatureVector:
    """Compute the 22 features of a cycle sampled at `sample_rate_hz`.

    Raises:
        SehsInputError: If the cycle is shorter than 8 samples or not finite.
    """
    x = np.asarray(cycle, dtype=np.float64)
    if x.ndim != 1 or x.size < MIN_CYCLE_LEN:
        msg = f"Feature extraction needs at least {MIN_CYCLE_LEN} samples"
        raise SehsInputError(msg)
    if not np.all(np.isfinite(x)):
        msg = "Cycle holds non-finite samples"
        raise SehsInputError(msg)
    if sample_rate_hz <= 0:
        msg = f"sample_rate_hz must be positive, got {sample_rate_hz}"
        raise SehsInputError(msg)
    return FeatureVector(_time_features(x) + _spectral_features(x, sample_rate_hz))


def feature_matrix(
    cycles: Iterable[ArrayLike], sample_rate_hz: float
) -> NDArray[np.float64]:
    """Features of several cycles stacked as rows."""
    rows = [extract_features(cycle, sample_rate_hz).values for cycle in cycles]
    if not rows:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.vstack(rows)
