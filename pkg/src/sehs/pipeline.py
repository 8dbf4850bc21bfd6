"""Gait pipeline: from a voltage signal to fixed-length gait cycles."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "BandEstimate",
    "Extraction",
    "PipelineConfig",
    "Rejection",
    "Segment",
    "SegmentationReport",
    "auto_band",
    "build_dataset",
    "denoise",
    "detect_cycles",
    "extract_cycles",
    "gait_similarity",
    "interpolate_cycle",
    "reject_irregular",
    "resample_dataset",
)

from itertools import combinations
from typing import TYPE_CHECKING, Final, NamedTuple

import attrs
import numpy as np
from loguru import logger
from scipy import ndimage, signal

from sehs.dtw import dtw_distance
from sehs.exceptions import SehsConfigError, SehsInputError
from sehs.models import Dataset, GaitCycle, PehPosition
from sehs.utils import make_rng, positive

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable, Iterable, Sequence

    from numpy.typing import ArrayLike, NDArray

MIN_DETECT_S: Final = 3.0
MIN_BAND_S: Final = 10.0
STRIDE_BAND: Final = (0.5, 3.0)
NOISE_FLOOR_RATIO: Final = 10.0
SUBHARMONIC_RATIO: Final = 0.25
PEAK_HEIGHT_RATIO: Final = 0.3
BANDPASS_ORDER: Final = 4


@attrs.frozen
class PipelineConfig:
    """Pipeline configuration.

    Attributes:
        lowpass_cutoff_hz: Cutoff of the denoising low-pass.
        ma_window: Width of the denoising moving average, in samples.
        bandpass_lo_hz: Lower edge of the segmentation band-pass.
        bandpass_hi_hz: Upper edge of the segmentation band-pass.
        target_len: Samples per interpolated cycle.
        dtw_reject_factor: Cycles farther (in DTW) from the typical cycle than
            this factor times the median distance are rejected.
        target_rate_hz: Rate cycles are resampled to, if any.
        fir_taps: Taps of the linear-phase low-pass.
        min_cycle_s: Shortest accepted cycle.
        max_cycle_s: Longest accepted cycle.
        auto_band: Estimate the band-pass per signal instead of using the
            configured edges.
    """

    lowpass_cutoff_hz: float = attrs.field(default=10.0, validator=positive())
    ma_window: int = attrs.field(default=5, validator=positive())
    bandpass_lo_hz: float = attrs.field(default=0.5, validator=positive())
    bandpass_hi_hz: float = attrs.field(default=3.0, validator=positive())
    target_len: int = 130
    dtw_reject_factor: float = 2.0
    target_rate_hz: float | None = None
    fir_taps: int = attrs.field(default=64, validator=positive())
    min_cycle_s: float = 0.5
    max_cycle_s: float = 2.0
    auto_band: bool = True

    def __attrs_post_init__(self) -> None:
        """Check the band layout."""
        if not self.bandpass_lo_hz < self.bandpass_hi_hz < self.lowpass_cutoff_hz:
            msg = (
                "Band edges must satisfy bandpass_lo_hz < bandpass_hi_hz < "
                f"lowpass_cutoff_hz, got {self.bandpass_lo_hz}, "
                f"{self.bandpass_hi_hz}, {self.lowpass_cutoff_hz}"
            )
            raise SehsConfigError(msg)
        if self.target_len < 2:  # noqa: PLR2004
            msg = f"target_len must be at least 2, got {self.target_len}"
            raise SehsConfigError(msg)
        if self.dtw_reject_factor <= 1:
            msg = f"dtw_reject_factor must exceed 1, got {self.dtw_reject_factor}"
            raise SehsConfigError(msg)
        if not 0 < self.min_cycle_s < self.max_cycle_s:
            msg = "Cycle duration guards must satisfy 0 < min_cycle_s < max_cycle_s"
            raise SehsConfigError(msg)

    def check_rate(self, sample_rate_hz: float) -> None:
        """Check the low-pass cutoff against the Nyquist frequency."""
        if not self.lowpass_cutoff_hz < sample_rate_hz / 2:
            msg = (
                f"lowpass_cutoff_hz {self.lowpass_cutoff_hz} must be below half "
                f"the sample rate ({sample_rate_hz} Hz)"
            )
            raise SehsConfigError(msg)


def denoise(
    samples: ArrayLike, sample_rate_hz: float, cfg: PipelineConfig | None = None
) -> NDArray[np.float64]:
    """Moving average followed by a zero-phase FIR low-pass.

    The low-pass is a windowed-sinc design applied forwards and backwards, so
    the output has the input's length and no phase shift.
    """
    cfg = cfg or PipelineConfig()
    cfg.check_rate(sample_rate_hz)
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < cfg.ma_window:
        msg = f"Signal of {x.size} samples is shorter than the window {cfg.ma_window}"
        raise SehsInputError(msg)
    smoothed = ndimage.uniform_filter1d(x, size=cfg.ma_window, mode="nearest")
    taps = signal.firwin(cfg.fir_taps, cfg.lowpass_cutoff_hz, fs=sample_rate_hz)
    padlen = min(3 * cfg.fir_taps, x.size - 1)
    return np.asarray(signal.filtfilt(taps, [1.0], smoothed, padlen=padlen))


class Segment(NamedTuple):
    """Half-open sample range `[start, end)` of one gait cycle."""

    start: int
    end: int


def detect_cycles(
    samples: ArrayLike, sample_rate_hz: float, cfg: PipelineConfig | None = None
) -> list[Segment]:
    """Segment a denoised signal into gait cycles.

    The signal is band-passed to the stride band; every positive peak of the
    band-passed signal marks a cycle boundary. Segments outside the duration
    guards are dropped.
    """
    cfg = cfg or PipelineConfig()
    x = np.asarray(samples, dtype=np.float64)
    if x.size < MIN_DETECT_S * sample_rate_hz:
        msg = f"Cycle detection needs at least {MIN_DETECT_S} s of signal"
        raise SehsInputError(msg)
    if not cfg.bandpass_hi_hz < sample_rate_hz / 2:
        msg = f"Band-pass edge {cfg.bandpass_hi_hz} Hz is above Nyquist"
        raise SehsConfigError(msg)
    sos = signal.butter(
        BANDPASS_ORDER,
        [cfg.bandpass_lo_hz, cfg.bandpass_hi_hz],
        btype="bandpass",
        fs=sample_rate_hz,
        output="sos",
    )
    banded = signal.sosfiltfilt(sos, x)
    top = float(banded.max())
    if not top > 0:
        return []
    peaks, _ = signal.find_peaks(
        banded,
        height=PEAK_HEIGHT_RATIO * top,
        distance=max(1, int(cfg.min_cycle_s * sample_rate_hz)),
    )
    segments: list[Segment] = []
    for start, end in zip(peaks[:-1], peaks[1:], strict=True):
        duration_s = (end - start) / sample_rate_hz
        if cfg.min_cycle_s <= duration_s <= cfg.max_cycle_s:
            segments.append(Segment(int(start), int(end)))
    return segments


class BandEstimate(NamedTuple):
    """Segmentation band estimated from a signal."""

    lo_hz: float
    hi_hz: float
    f0_hz: float | None
    fallback: bool


def auto_band(samples: ArrayLike, sample_rate_hz: float) -> BandEstimate:
    """Band-pass edges around the dominant stride frequency.

    The stride frequency is the largest spectral peak in [0.5, 3] Hz, moved
    down to a subharmonic when that carries comparable power (gait waveforms
    often have a strong second harmonic). Without a peak above the noise floor
    the full stride band is returned with `fallback` set.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < MIN_BAND_S * sample_rate_hz:
        msg = f"Band estimation needs at least {MIN_BAND_S} s of signal"
        raise SehsInputError(msg)
    low, high = STRIDE_BAND
    nperseg = int(min(x.size, 20 * sample_rate_hz))
    freqs, psd = signal.welch(x, fs=sample_rate_hz, nperseg=nperseg)
    in_band = (freqs >= low) & (freqs <= high)
    floor = float(np.median(psd[1:])) if psd.size > 1 else 0.0
    band_psd = np.where(in_band, psd, 0.0)
    k = int(np.argmax(band_psd))
    if not in_band.any() or not band_psd[k] > NOISE_FLOOR_RATIO * floor:
        logger.warning("No stride peak above the noise floor; using the full band.")
        return BandEstimate(lo_hz=low, hi_hz=high, f0_hz=None, fallback=True)

    f0 = float(freqs[k])
    for divisor in (3, 2):
        candidate = f0 / divisor
        if candidate < low:
            continue
        j = int(np.argmin(np.abs(freqs - candidate)))
        neighbourhood = psd[max(j - 1, 0) : j + 2]
        if neighbourhood.max() >= SUBHARMONIC_RATIO * band_psd[k]:
            f0 = float(freqs[max(j - 1, 0) + int(np.argmax(neighbourhood))])
            break
    return BandEstimate(
        lo_hz=max(0.6 * f0, low),
        hi_hz=min(1.6 * f0, high),
        f0_hz=f0,
        fallback=False,
    )


def interpolate_cycle(segment: ArrayLike, target_len: int) -> NDArray[np.float64]:
    """Linearly interpolate a segment onto `target_len` evenly spaced points.

    The first and last samples are preserved exactly.
    """
    x = np.asarray(segment, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:  # noqa: PLR2004
        msg = f"Interpolation needs at least 2 samples, got {x.size}"
        raise SehsInputError(msg)
    if target_len < 2:  # noqa: PLR2004
        msg = f"target_len must be at least 2, got {target_len}"
        raise SehsInputError(msg)
    grid = np.linspace(0.0, x.size - 1, target_len)
    return np.interp(grid, np.arange(x.size, dtype=np.float64), x)


class Rejection(NamedTuple):
    """Outcome of irregular-cycle rejection."""

    kept: list[NDArray[np.float64]]
    rejected: list[NDArray[np.float64]]
    typical: NDArray[np.float64]
    kept_indices: list[int]
    distances: NDArray[np.float64]


def reject_irregular(
    cycles: Sequence[ArrayLike], cfg: PipelineConfig | None = None
) -> Rejection:
    """Drop cycles whose DTW distance to the typical cycle is unusually large.

    The typical cycle is the pointwise mean. A cycle is rejected when its
    distance exceeds `dtw_reject_factor` times the median distance.
    """
    cfg = cfg or PipelineConfig()
    if len(cycles) < 3:  # noqa: PLR2004
        msg = f"Rejection needs at least 3 cycles, got {len(cycles)}"
        raise SehsInputError(msg)
    stacked = np.vstack([np.asarray(c, dtype=np.float64) for c in cycles])
    typical = stacked.mean(axis=0)
    distances = np.array([dtw_distance(row, typical) for row in stacked])
    threshold = cfg.dtw_reject_factor * float(np.median(distances))
    keep = distances <= threshold
    return Rejection(
        kept=[stacked[i] for i in np.flatnonzero(keep)],
        rejected=[stacked[i] for i in np.flatnonzero(~keep)],
        typical=typical,
        kept_indices=[int(i) for i in np.flatnonzero(keep)],
        distances=distances,
    )


def gait_similarity(
    cycles: Sequence[ArrayLike],
    *,
    max_pairs: int | None = None,
    seed: int = 0,
    distance: Callable[[ArrayLike, ArrayLike], float] = dtw_distance,
) -> float:
    """Mean DTW distance over unordered pairs of cycles.

    With `max_pairs`, a seeded random subset of the pairs is used instead of
    all of them. Distances are summed in pair order.
    """
    if len(cycles) < 2:  # noqa: PLR2004
        msg = f"Similarity needs at least 2 cycles, got {len(cycles)}"
        raise SehsInputError(msg)
    pairs = list(combinations(range(len(cycles)), 2))
    if max_pairs is not None and len(pairs) > max_pairs:
        chosen = make_rng(seed).choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[i] for i in sorted(chosen)]
    total = 0.0
    for i, j in pairs:
        total += distance(cycles[i], cycles[j])
    return total / len(pairs)


def resample_dataset(
    ds: Dataset, target_rate_hz: float, original_rate_hz: float
) -> Dataset:
    """Resample every cycle to the length it would have at `target_rate_hz`.

    Cycles never shrink below two samples.
    """
    if target_rate_hz > original_rate_hz:
        msg = (
            f"Cannot resample from {original_rate_hz} Hz up to {target_rate_hz} Hz"
        )
        raise SehsInputError(msg)
    if target_rate_hz <= 0:
        msg = f"target_rate_hz must be positive, got {target_rate_hz}"
        raise SehsInputError(msg)
    cycles = [
        cycle.with_samples(
            interpolate_cycle(
                cycle.samples,
                max(2, round(len(cycle) * target_rate_hz / original_rate_hz)),
            )
        )
        for cycle in ds.cycles
    ]
    return attrs.evolve(ds, cycles=cycles)


@attrs.frozen
class SegmentationReport:
    """Per-signal segmentation counts.

    Attributes:
        subject_id: Subject the signal belongs to.
        detected: Cycles found by peak detection.
        rejected: Cycles rejected as irregular.
        kept: Cycles kept.
        band: Band-pass edges used for detection.
        durations_s: Durations of the detected cycles.
    """

    subject_id: int
    detected: int
    rejected: int
    kept: int
    band: tuple[float, float]
    durations_s: tuple[float, ...] = ()


class Extraction(NamedTuple):
    """Cycles kept from one signal and the segmentation report."""

    cycles: list[GaitCycle]
    report: SegmentationReport


def extract_cycles(
    samples: ArrayLike,
    sample_rate_hz: float,
    subject_id: int,
    cfg: PipelineConfig | None = None,
    *,
    source_peh: PehPosition = PehPosition.FRONT,
) -> Extraction:
    """Denoise, segment, interpolate and reject irregular cycles of one signal."""
    cfg = cfg or PipelineConfig()
    clean = denoise(samples, sample_rate_hz, cfg)
    if cfg.auto_band:
        band = auto_band(clean, sample_rate_hz)
        cfg = attrs.evolve(cfg, bandpass_lo_hz=band.lo_hz, bandpass_hi_hz=band.hi_hz)
    segments = detect_cycles(clean, sample_rate_hz, cfg)
    durations = tuple((end - start) / sample_rate_hz for start, end in segments)
    shaped = [
        interpolate_cycle(clean[start:end], cfg.target_len) for start, end in segments
    ]

    if len(shaped) >= 3:  # noqa: PLR2004
        rejection = reject_irregular(shaped, cfg)
        kept_indices = rejection.kept_indices
    else:
        kept_indices = list(range(len(shaped)))
    cycles = [
        GaitCycle(
            samples=shaped[i],
            subject_id=subject_id,
            source_peh=source_peh,
            original_duration_s=durations[i],
        )
        for i in kept_indices
    ]
    report = SegmentationReport(
        subject_id=subject_id,
        detected=len(shaped),
        rejected=len(shaped) - len(cycles),
        kept=len(cycles),
        band=(cfg.bandpass_lo_hz, cfg.bandpass_hi_hz),
        durations_s=durations,
    )
    logger.info(
        f"Subject {subject_id} ({source_peh.value}): {report.detected} cycles "
        f"detected, {report.rejected} rejected."
    )
    return Extraction(cycles=cycles, report=report)


def build_dataset(
    extractions: Iterable[Extraction], per_subject: int, n_subjects: int
) -> Dataset:
    """Balanced dataset: the first `per_subject` kept cycles of every subject."""
    cycles = [cycle for extraction in extractions for cycle in extraction.cycles]
    return Dataset.balanced(cycles, per_subject, n_subjects)
