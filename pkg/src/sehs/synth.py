"""Synthetic gait excitation."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "REAR_PHASE_SHIFT",
    "REAR_SCALE",
    "Excitation",
    "PopulationConfig",
    "Span",
    "SubjectProfile",
    "draw_population",
    "draw_profile",
    "rear_profile",
    "synth_excitation",
)

import math
from typing import TYPE_CHECKING, Final, NamedTuple

import attrs
import numpy as np

from sehs.exceptions import SehsConfigError, SehsInputError
from sehs.utils import between, make_rng, non_negative, positive, subject_seed

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import NDArray

REAR_SCALE: Final = math.sqrt(72 / 92)
"""Rear peak amplitudes relative to the front; rear energy is ~78% of front."""
REAR_PHASE_SHIFT: Final = 0.02
"""Rear peak positions relative to the front, in cycles."""

MIN_CYCLE_S: Final = 0.5
MAX_CYCLE_S: Final = 2.0
PEAK_SPAN_WIDTHS: Final = 3.0
REBOUND_OFFSET_WIDTHS: Final = 2.2
MAX_AMPLITUDE_JITTER: Final = 0.5


def _gauss(
    phase: NDArray[np.float64], center: float, width: float
) -> NDArray[np.float64]:
    return np.exp(-0.5 * ((phase - center) / width) ** 2)


@attrs.frozen
class SubjectProfile:
    """Parametric gait waveform of one subject.

    Each cycle has a heel-strike and a toe-off peak of positive strain, each
    followed by a negative rebound lobe, plus subject-specific harmonics.

    Attributes:
        subject_id: Subject label.
        cycle_duration_mean_s: Mean gait cycle duration.
        cycle_duration_sd_s: Standard deviation of the cycle duration.
        heel_peak_v: Open-circuit amplitude of the heel-strike peak.
        toe_peak_v: Open-circuit amplitude of the toe-off peak.
        heel_pos: Position of the heel peak within a cycle, in (0, 1).
        toe_pos: Position of the toe peak within a cycle, in (0, 1).
        peak_width_frac: Width (standard deviation) of each peak, in cycles.
        harmonic_coeffs: Amplitudes of the cycle harmonics, as fractions of the
            heel peak.
        noise_sd_v: Additive white noise.
        rebound_frac: Depth of the negative lobe after each peak, relative to
            the peak.
        irregular_rate: Probability that a cycle is irregular (turning), with a
            randomised peak structure.
        amplitude_jitter: Cycle-to-cycle standard deviation of each peak's
            amplitude, relative to the profile amplitude.
    """

    subject_id: int
    cycle_duration_mean_s: float = attrs.field(default=1.0, validator=between(0.8, 1.3))
    cycle_duration_sd_s: float = attrs.field(default=0.025, validator=non_negative())
    heel_peak_v: float = attrs.field(default=290.0, validator=positive())
    toe_peak_v: float = attrs.field(default=232.0, validator=positive())
    heel_pos: float = 0.2
    toe_pos: float = 0.55
    peak_width_frac: float = 0.055
    harmonic_coeffs: tuple[float, ...] = attrs.field(default=(), converter=tuple)
    noise_sd_v: float = attrs.field(default=0.1, validator=non_negative())
    rebound_frac: float = attrs.field(default=0.3, validator=between(0.0, 1.0))
    irregular_rate: float = attrs.field(default=0.0, validator=between(0.0, 1.0))
    amplitude_jitter: float = attrs.field(default=0.0, validator=between(0.0, 0.5))

    def __attrs_post_init__(self) -> None:
        """Check the peak layout."""
        w = self.peak_width_frac
        if not 0 < w < 1:
            msg = f"peak_width_frac must be in (0, 1), got {w}"
            raise SehsConfigError(msg)
        if not 0 < self.heel_pos < self.toe_pos < 1:
            msg = (
                f"Peak positions must satisfy 0 < heel_pos < toe_pos < 1, got "
                f"{self.heel_pos}, {self.toe_pos}"
            )
            raise SehsConfigError(msg)
        span = PEAK_SPAN_WIDTHS * w
        if self.heel_pos - span < 0 or self.toe_pos + span > 1:
            msg = (
                f"Peaks of width {w} do not fit in the cycle at positions "
                f"{self.heel_pos} and {self.toe_pos}"
            )
            raise SehsConfigError(msg)

    def _peak(self, phase: NDArray[np.float64], center: float) -> NDArray[np.float64]:
        w = self.peak_width_frac
        offset = REBOUND_OFFSET_WIDTHS * w
        return _gauss(phase, center, w) - self.rebound_frac * _gauss(
            phase, center + offset, w
        )

    def shape(
        self,
        phase: NDArray[np.float64],
        heel_scale: float | NDArray[np.float64] = 1.0,
        toe_scale: float | NDArray[np.float64] = 1.0,
    ) -> NDArray[np.float64]:
        """Noise-free waveform of a regular cycle at the given phases.

        `heel_scale` and `toe_scale` multiply the peak amplitudes, per sample
        when given as arrays.
        """
        wave = self.heel_peak_v * heel_scale * self._peak(
            phase, self.heel_pos
        ) + self.toe_peak_v * toe_scale * self._peak(phase, self.toe_pos)
        for order, coeff in enumerate(self.harmonic_coeffs, start=1):
            wave = wave + self.heel_peak_v * coeff * np.sin(2 * np.pi * order * phase)
        return wave


def rear_profile(
    front: SubjectProfile,
    scale: float = REAR_SCALE,
    phase_shift: float = REAR_PHASE_SHIFT,
) -> SubjectProfile:
    """Profile of the rear harvester: scaled and phase-shifted front peaks."""
    return attrs.evolve(
        front,
        heel_peak_v=front.heel_peak_v * scale,
        toe_peak_v=front.toe_peak_v * scale,
        heel_pos=front.heel_pos + phase_shift,
        toe_pos=front.toe_pos + phase_shift,
    )


class Excitation(NamedTuple):
    """Synthetic source waveform.

    `v_source` is sampled at the integrator rate, `cycle_marks` holds the start
    time of every cycle and `irregular` flags the injected irregular cycles.
    """

    v_source: NDArray[np.float64]
    cycle_marks: NDArray[np.float64]
    irregular: NDArray[np.bool_]


def synth_excitation(
    profile: SubjectProfile,
    duration_s: float,
    seed: int,
    *,
    step_s: float = 1e-3,
) -> Excitation:
    """Open-circuit source voltage of a subject walking for `duration_s`.

    Cycle durations are drawn from a normal distribution and clamped to
    [0.5, 2.0] s. Each cycle scales its heel and toe peaks independently by
    `N(1, amplitude_jitter)`, clamped to [0.5, 1.5]. Irregular cycles replace the
    heel/toe structure by one or three peaks at random positions.
    """
    if duration_s <= 0:
        msg = f"duration_s must be positive, got {duration_s}"
        raise SehsInputError(msg)
    rng = make_rng(seed)
    n = round(duration_s / step_s)
    t = np.arange(n, dtype=np.float64) * step_s

    starts = [0.0]
    durations: list[float] = []
    while starts[-1] < duration_s:
        d = rng.normal(profile.cycle_duration_mean_s, profile.cycle_duration_sd_s)
        durations.append(float(np.clip(d, MIN_CYCLE_S, MAX_CYCLE_S)))
        starts.append(starts[-1] + durations[-1])
    cycle_start = np.array(starts[:-1])
    cycle_len = np.array(durations)
    irregular = rng.random(len(durations)) < profile.irregular_rate

    index = np.searchsorted(cycle_start, t, side="right") - 1
    phase = (t - cycle_start[index]) / cycle_len[index]
    if profile.amplitude_jitter > 0:
        scales = np.clip(
            rng.normal(1.0, profile.amplitude_jitter, (len(durations), 2)),
            1.0 - MAX_AMPLITUDE_JITTER,
            1.0 + MAX_AMPLITUDE_JITTER,
        )
        wave = profile.shape(phase, scales[index, 0], scales[index, 1])
    else:
        wave = profile.shape(phase)

    w = profile.peak_width_frac
    offset = REBOUND_OFFSET_WIDTHS * w
    for cycle in np.flatnonzero(irregular):
        mask = index == cycle
        n_peaks = int(rng.choice([1, 3]))
        centers = rng.uniform(PEAK_SPAN_WIDTHS * w, 1 - PEAK_SPAN_WIDTHS * w, n_peaks)
        heights = rng.uniform(0.5, 1.0, n_peaks) * profile.heel_peak_v
        p = phase[mask]
        replaced = np.zeros_like(p)
        for center, height in zip(centers, heights, strict=True):
            replaced += height * (
                _gauss(p, center, w)
                - profile.rebound_frac * _gauss(p, center + offset, w)
            )
        wave[mask] = replaced

    if profile.noise_sd_v > 0:
        wave = wave + rng.normal(0.0, profile.noise_sd_v, n)
    return Excitation(v_source=wave, cycle_marks=cycle_start, irregular=irregular)


class Span(NamedTuple):
    """Closed range a population parameter is drawn from."""

    low: float
    high: float


def _check_spans(instance: PopulationConfig) -> None:
    for field in attrs.fields(type(instance)):
        value = getattr(instance, field.name)
        if isinstance(value, Span) and value.low > value.high:
            msg = f"{field.name} range is empty: {value}"
            raise SehsConfigError(msg)


def _to_span(value: tuple[float, float] | list[float]) -> Span:
    low, high = value
    return Span(float(low), float(high))


@attrs.frozen
class PopulationConfig:
    """Ranges the synthetic subjects are drawn from (uniformly).

    Attributes:
        heel_peak_v: Heel peak amplitude.
        toe_ratio: Toe peak amplitude relative to the heel peak.
        heel_pos: Heel peak position.
        toe_pos: Toe peak position.
        peak_width_frac: Peak width.
        cycle_duration_mean_s: Mean cycle duration.
        cycle_duration_sd_s: Cycle-to-cycle duration jitter.
        harmonic_coeff: Each harmonic coefficient.
        n_harmonics: Number of harmonics.
        noise_sd_v: Noise level.
        rebound_frac: Rebound depth, shared by every subject.
        irregular_rate: Irregular-cycle rate, shared by every subject.
        amplitude_jitter: Cycle-to-cycle peak amplitude jitter.
    """

    heel_peak_v: Span = attrs.field(default=Span(280.0, 305.0), converter=_to_span)
    toe_ratio: Span = attrs.field(default=Span(0.75, 0.85), converter=_to_span)
    heel_pos: Span = attrs.field(default=Span(0.2, 0.28), converter=_to_span)
    toe_pos: Span = attrs.field(default=Span(0.52, 0.62), converter=_to_span)
    peak_width_frac: Span = attrs.field(
        default=Span(0.052, 0.058), converter=_to_span
    )
    cycle_duration_mean_s: Span = attrs.field(
        default=Span(0.88, 1.22), converter=_to_span
    )
    cycle_duration_sd_s: Span = attrs.field(
        default=Span(0.015, 0.035), converter=_to_span
    )
    harmonic_coeff: Span = attrs.field(default=Span(-0.04, 0.04), converter=_to_span)
    n_harmonics: int = attrs.field(default=3, validator=non_negative())
    noise_sd_v: Span = attrs.field(default=Span(0.05, 0.15), converter=_to_span)
    rebound_frac: float = attrs.field(default=0.3, validator=between(0.0, 1.0))
    irregular_rate: float = attrs.field(default=0.0, validator=between(0.0, 1.0))
    amplitude_jitter: Span = attrs.field(default=Span(0.04, 0.1), converter=_to_span)

    def __attrs_post_init__(self) -> None:
        """Check the ranges."""
        _check_spans(self)


def draw_profile(cfg: PopulationConfig, subject_id: int, seed: int) -> SubjectProfile:
    """Draw one subject; the draw depends only on `seed + subject_id`."""
    rng = make_rng(subject_seed(seed, subject_id))

    def draw(span: Span) -> float:
        return float(rng.uniform(span.low, span.high))

    heel_peak_v = draw(cfg.heel_peak_v)
    return SubjectProfile(
        subject_id=subject_id,
        heel_peak_v=heel_peak_v,
        toe_peak_v=heel_peak_v * draw(cfg.toe_ratio),
        heel_pos=draw(cfg.heel_pos),
        toe_pos=draw(cfg.toe_pos),
        peak_width_frac=draw(cfg.peak_width_frac),
        cycle_duration_mean_s=draw(cfg.cycle_duration_mean_s),
        cycle_duration_sd_s=draw(cfg.cycle_duration_sd_s),
        harmonic_coeffs=tuple(
            draw(cfg.harmonic_coeff) for _ in range(cfg.n_harmonics)
        ),
        noise_sd_v=draw(cfg.noise_sd_v),
        rebound_frac=cfg.rebound_frac,
        irregular_rate=cfg.irregular_rate,
        amplitude_jitter=draw(cfg.amplitude_jitter),
    )


def draw_population(
    cfg: PopulationConfig, n_subjects: int, seed: int
) -> list[SubjectProfile]:
    """Draw subjects 0 to `n_subjects - 1`."""
    return [draw_profile(cfg, subject_id, seed) for subject_id in range(n_subjects)]
