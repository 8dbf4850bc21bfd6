"""Models."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "RAW_CHANNELS",
    "AdcConfig",
    "Channel",
    "Dataset",
    "GaitCycle",
    "PehPosition",
    "VoltageTrace",
)

from collections import defaultdict
from enum import Enum, StrEnum
from typing import TYPE_CHECKING, Final

import attrs
import numpy as np
from loguru import logger

from sehs.exceptions import SehsInputError, SehsStructureError
from sehs.utils import between, positive

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterable, Mapping

    from numpy.typing import NDArray


class Channel(StrEnum):
    """Trace channel names."""

    V_A = "V_A"
    V_B = "V_B"
    V_C = "V_C"
    V_A_F = "V_A_f"
    V_B_F = "V_B_f"
    V_F = "V_f"


RAW_CHANNELS: Final = (Channel.V_A.value, Channel.V_B.value, Channel.V_C.value)
"""Channels sampled by the ADC; persisted as raw codes."""


class PehPosition(Enum):
    """Where the harvester sits in the shoe."""

    FRONT = "Front"
    REAR = "Rear"


@attrs.frozen
class AdcConfig:
    """ADC resolution and reference.

    Attributes:
        bits: Resolution in bits.
        full_scale_v: Reference voltage; codes map onto [0, full_scale_v).
    """

    bits: int = attrs.field(default=10, validator=between(1, 16))
    full_scale_v: float = attrs.field(default=5.0, validator=positive())

    @property
    def levels(self) -> int:
        """Number of codes."""
        return int(2**self.bits)

    @property
    def lsb_v(self) -> float:
        """Voltage of one code step."""
        return self.full_scale_v / self.levels


def _as_channels(
    channels: Mapping[str, NDArray[np.float64]],
) -> dict[str, NDArray[np.float64]]:
    out: dict[str, NDArray[np.float64]] = {}
    for name, samples in channels.items():
        array = np.array(samples, dtype=np.float64)
        array.setflags(write=False)
        out[name] = array
    return out


def _channels_eq(
    a: Mapping[str, NDArray[np.float64]], b: Mapping[str, NDArray[np.float64]]
) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


@attrs.frozen
class VoltageTrace:
    """Multi-channel sampled time series.

    Attributes:
        sample_rate_hz: Sampling rate.
        channels: Channel name to samples, in volts. The ADC channels (`V_A`,
            `V_B`, `V_C`) hold quantized voltages inside the ADC range; derived
            channels (the filter outputs) may hold any finite value.
        adc: ADC the quantized channels were sampled with.
    """

    sample_rate_hz: float = attrs.field(validator=positive())
    channels: dict[str, NDArray[np.float64]] = attrs.field(
        converter=_as_channels, eq=attrs.cmp_using(eq=_channels_eq)
    )
    adc: AdcConfig = attrs.Factory(AdcConfig)

    @channels.validator
    def _check_channels(
        self,
        _attribute: attrs.Attribute[object],
        value: dict[str, NDArray[np.float64]],
    ) -> None:
        if not value:
            msg = "A trace needs at least one channel"
            raise SehsStructureError(msg)
        lengths = {name: len(samples) for name, samples in value.items()}
        if len(set(lengths.values())) != 1:
            msg = f"Channel lengths differ: {lengths}"
            raise SehsStructureError(msg)
        if next(iter(lengths.values())) < 1:
            msg = "Channels must hold at least one sample"
            raise SehsStructureError(msg)
        for name in RAW_CHANNELS:
            samples = value.get(name)
            if samples is None:
                continue
            if np.any(samples < 0) or np.any(samples > self.adc.full_scale_v):
                msg = f"Channel {name} holds samples outside the ADC range"
                raise SehsStructureError(msg)

    def __len__(self) -> int:
        """Number of samples per channel."""
        return len(next(iter(self.channels.values())))

    @property
    def duration_s(self) -> float:
        """Time between the first and the last sample."""
        return (len(self) - 1) / self.sample_rate_hz

    @property
    def times_s(self) -> NDArray[np.float64]:
        """Sample timestamps."""
        return np.arange(len(self), dtype=np.float64) / self.sample_rate_hz

    def channel(self, name: str) -> NDArray[np.float64]:
        """Samples of one channel."""
        try:
            return self.channels[name]
        except KeyError as e:
            msg = f"Trace has no channel {name!r} (has {sorted(self.channels)})"
            raise SehsStructureError(msg) from e

    def differential(self) -> NDArray[np.float64]:
        """Unfiltered differential signal V_A - V_B."""
        return self.channel(Channel.V_A.value) - self.channel(Channel.V_B.value)

    def merged(self, other: VoltageTrace) -> VoltageTrace:
        """Combine the channels of two traces sampled at the same rate."""
        if other.sample_rate_hz != self.sample_rate_hz:
            msg = (
                f"Cannot merge traces sampled at {self.sample_rate_hz} Hz "
                f"and {other.sample_rate_hz} Hz"
            )
            raise SehsStructureError(msg)
        return VoltageTrace(
            sample_rate_hz=self.sample_rate_hz,
            channels={**self.channels, **other.channels},
            adc=self.adc,
        )


def _as_samples(samples: Iterable[float]) -> NDArray[np.float64]:
    array = np.array(samples, dtype=np.float64)
    array.setflags(write=False)
    return array


@attrs.frozen
class GaitCycle:
    """One segmented, length-normalized gait cycle.

    Attributes:
        samples: Cycle samples in volts.
        subject_id: Label of the walking subject.
        source_peh: Harvester the cycle was recorded from.
        original_duration_s: Duration of the cycle before interpolation.
    """

    samples: NDArray[np.float64] = attrs.field(
        converter=_as_samples, eq=attrs.cmp_using(eq=np.array_equal)
    )
    subject_id: int
    source_peh: PehPosition = PehPosition.FRONT
    original_duration_s: float = attrs.field(default=1.0)

    @samples.validator
    def _check_samples(
        self, _attribute: attrs.Attribute[object], value: NDArray[np.float64]
    ) -> None:
        if value.ndim != 1 or len(value) < 2:  # noqa: PLR2004
            msg = f"A cycle needs at least 2 samples in 1-D, got shape {value.shape}"
            raise SehsStructureError(msg)

    @original_duration_s.validator
    def _check_duration(
        self, _attribute: attrs.Attribute[object], value: float
    ) -> None:
        if not 0.0 < value < 5.0:  # noqa: PLR2004
            msg = f"original_duration_s must be in (0, 5), got {value}"
            raise SehsStructureError(msg)

    def __len__(self) -> int:
        """Cycle length in samples."""
        return len(self.samples)

    def with_samples(self, samples: NDArray[np.float64]) -> GaitCycle:
        """Same cycle metadata with new samples."""
        return attrs.evolve(self, samples=samples)


@attrs.frozen
class Dataset:
    """Labelled collection of gait cycles.

    Attributes:
        cycles: The cycles, grouped by subject in ascending id order.
        n_subjects: Number of subjects; ids run over [0, n_subjects).
        cycles_per_subject: Cycles per subject when balanced, else 0.
    """

    cycles: tuple[GaitCycle, ...] = attrs.field(converter=tuple)
    n_subjects: int
    cycles_per_subject: int = 0

    @cycles.validator
    def _check_cycles(
        self, _attribute: attrs.Attribute[object], value: tuple[GaitCycle, ...]
    ) -> None:
        present = {cycle.subject_id for cycle in value}
        expected = set(range(self.n_subjects))
        if present != expected:
            missing = sorted(expected - present)
            extra = sorted(present - expected)
            msg = f"Subject ids mismatch: missing {missing}, unexpected {extra}"
            raise SehsStructureError(msg)
        if self.cycles_per_subject:
            counts = self.counts()
            if set(counts.values()) != {self.cycles_per_subject}:
                msg = (
                    f"Balanced dataset expects {self.cycles_per_subject} cycles per "
                    f"subject, got {counts}"
                )
                raise SehsStructureError(msg)

    @classmethod
    def balanced(
        cls, cycles: Iterable[GaitCycle], per_subject: int, n_subjects: int
    ) -> Dataset:
        """Keep the first `per_subject` cycles of every subject, in order.

        Subjects with fewer surviving cycles keep all of them (with a warning),
        in which case the result is not flagged as balanced.
        """
        if per_subject < 1:
            msg = f"per_subject must be positive, got {per_subject}"
            raise SehsInputError(msg)
        grouped: defaultdict[int, list[GaitCycle]] = defaultdict(list)
        for cycle in cycles:
            grouped[cycle.subject_id].append(cycle)
        kept: list[GaitCycle] = []
        short = False
        for subject_id in range(n_subjects):
            available = grouped.get(subject_id, [])
            if len(available) < per_subject:
                logger.warning(
                    f"Subject {subject_id} has {len(available)} cycles, "
                    f"fewer than the requested {per_subject}."
                )
                short = True
            kept.extend(available[:per_subject])
        return cls(
            cycles=kept,
            n_subjects=n_subjects,
            cycles_per_subject=0 if short else per_subject,
        )

    def __len__(self) -> int:
        """Number of cycles."""
        return len(self.cycles)

    def counts(self) -> dict[int, int]:
        """Cycles per subject id."""
        counts = dict.fromkeys(range(self.n_subjects), 0)
        for cycle in self.cycles:
            counts[cycle.subject_id] += 1
        return counts

    def labels(self) -> NDArray[np.int64]:
        """Subject ids, one per cycle."""
        return np.array([cycle.subject_id for cycle in self.cycles], dtype=np.int64)

    def matrix(self) -> NDArray[np.float64]:
        """Cycles stacked as rows; requires equal lengths."""
        lengths = {len(cycle) for cycle in self.cycles}
        if len(lengths) != 1:
            msg = f"Cycles have different lengths: {sorted(lengths)}"
            raise SehsStructureError(msg)
        return np.vstack([cycle.samples for cycle in self.cycles])

    def take(self, per_subject: int) -> Dataset:
        """First `per_subject` cycles of every subject."""
        return Dataset.balanced(self.cycles, per_subject, self.n_subjects)

    def select(self, indices: Iterable[int]) -> tuple[GaitCycle, ...]:
        """Cycles at the given positions."""
        return tuple(self.cycles[i] for i in indices)
