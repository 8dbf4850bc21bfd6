"""Harvested energy and sensing power accounting."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "ONE_ADC_AMP_PROFILE",
    "PROFILES",
    "SEHS_PROFILE",
    "Improvement",
    "PowerProfile",
    "StepEnergies",
    "energy_per_event",
    "harvest_improvement",
    "overall_power",
    "per_step_energy",
    "power_reduction",
    "trace_step_energy",
)

from typing import TYPE_CHECKING, Any, Final, NamedTuple

import attrs
import numpy as np
from loguru import logger

from sehs.circuit import harvested_energy
from sehs.exceptions import SehsConfigError, SehsInputError
from sehs.models import Channel
from sehs.pipeline import PipelineConfig, auto_band, denoise, detect_cycles
from sehs.utils import non_negative

if TYPE_CHECKING:  # pragma: no cover
    from sehs.circuit import SimResult
    from sehs.models import VoltageTrace

US: Final = 1e-6
J_TO_UJ: Final = 1e6
DISCHARGE_DROP_V: Final = 0.5


@attrs.frozen
class PowerProfile:
    """Duty-cycled sensing front end.

    Attributes:
        mcu_on_time_us: Time the MCU is awake during one sampling event.
        total_event_time_us: Duration of one sampling event.
        sleep_power_uw: MCU deep-sleep power.
        adc_event_power_uw: Average power during a sampling event.
        amplifier_power_uw: Power of a signal amplifier during an event.
        sampling_rate_hz: Sampling events per second.
        event_includes_amplifier: Whether the amplifier counts towards the
            energy of one event.
    """

    mcu_on_time_us: float = attrs.field(validator=non_negative())
    total_event_time_us: float = attrs.field(validator=non_negative())
    sleep_power_uw: float = attrs.field(validator=non_negative())
    adc_event_power_uw: float = attrs.field(validator=non_negative())
    amplifier_power_uw: float = attrs.field(default=0.0, validator=non_negative())
    sampling_rate_hz: float = attrs.field(default=40.0, validator=non_negative())
    event_includes_amplifier: bool = True

    def __attrs_post_init__(self) -> None:
        """Check the event layout."""
        if self.mcu_on_time_us > self.total_event_time_us:
            msg = (
                f"mcu_on_time_us ({self.mcu_on_time_us}) exceeds "
                f"total_event_time_us ({self.total_event_time_us})"
            )
            raise SehsConfigError(msg)

    @property
    def duty_cycle(self) -> float:
        """Fraction of each second spent in sampling events."""
        return self.sampling_rate_hz * self.total_event_time_us * US

    def to_payload(self) -> dict[str, Any]:
        """JSON-compatible representation."""
        return attrs.asdict(self)


SEHS_PROFILE: Final = PowerProfile(
    mcu_on_time_us=270.0,
    total_event_time_us=600.0,
    sleep_power_uw=6.0,
    adc_event_power_uw=511.0,
)
"""Three ADC channels, no amplifier."""

ONE_ADC_AMP_PROFILE: Final = PowerProfile(
    mcu_on_time_us=220.0,
    total_event_time_us=600.0,
    sleep_power_uw=6.0,
    adc_event_power_uw=482.0,
    amplifier_power_uw=500.0,
    event_includes_amplifier=False,
)
"""One ADC channel behind a signal amplifier."""

PROFILES: Final[dict[str, PowerProfile]] = {
    "sehs": SEHS_PROFILE,
    "one-adc-amp": ONE_ADC_AMP_PROFILE,
}


def overall_power(p: PowerProfile) -> float:
    """Average power in µW over one second of duty-cycled sampling.

    Raises:
        SehsConfigError: If the sampling events do not fit in one second.
    """
    duty = p.duty_cycle
    if duty > 1:
        msg = f"Duty cycle {duty:.3f} exceeds 1"
        raise SehsConfigError(msg)
    event = (p.adc_event_power_uw + p.amplifier_power_uw) * duty
    return event + p.sleep_power_uw * (1.0 - duty)


def energy_per_event(p: PowerProfile) -> float:
    """Energy of one sampling event, in µJ."""
    power = p.adc_event_power_uw
    if p.event_includes_amplifier:
        power += p.amplifier_power_uw
    return power * p.total_event_time_us * US


def power_reduction(proposed: PowerProfile, baseline: PowerProfile) -> float:
    """Relative saving of `proposed` over `baseline`, in percent."""
    base = overall_power(baseline)
    if base <= 0:
        msg = "Baseline power must be positive"
        raise SehsInputError(msg)
    return 100.0 * (base - overall_power(proposed)) / base


class Improvement(NamedTuple):
    """Gain of harvesting with both harvesters, in percent."""

    vs_front: float
    vs_rear: float


def harvest_improvement(e_front_uj: float, e_rear_uj: float) -> Improvement:
    """Energy gain of front plus rear over each harvester alone.

    Raises:
        SehsInputError: If either energy is not positive.
    """
    if e_front_uj <= 0 or e_rear_uj <= 0:
        msg = f"Energies must be positive, got {e_front_uj} and {e_rear_uj}"
        raise SehsInputError(msg)
    total = e_front_uj + e_rear_uj
    return Improvement(
        vs_front=100.0 * (total - e_front_uj) / e_front_uj,
        vs_rear=100.0 * (total - e_rear_uj) / e_rear_uj,
    )


class StepEnergies(NamedTuple):
    """Energy harvested during each cycle.

    `energies_uj` holds one value per complete cycle without a discharge, in
    cycle order; `skipped` holds the indices of the cycles dropped because the
    capacitor was discharged inside them.
    """

    energies_uj: list[float]
    skipped: list[int]


def per_step_energy(
    sim: SimResult, c_farad: float, *, quantized: bool = False
) -> StepEnergies:
    """Capacitor energy gained between consecutive cycle starts.

    Uses the continuous capacitor voltage, or the ADC `V_C` channel when
    `quantized` is set.

    Raises:
        SehsInputError: If the result carries fewer than two cycle starts.
    """
    starts = sim.cycle_starts
    if len(starts) < 2:  # noqa: PLR2004
        msg = "Per-step energy needs at least two cycle-start events"
        raise SehsInputError(msg)
    rate = sim.trace.sample_rate_hz
    v_cap = sim.trace.channel(Channel.V_C.value) if quantized else sim.v_cap
    discharges = np.asarray(sim.discharges, dtype=np.float64)

    energies: list[float] = []
    skipped: list[int] = []
    for index, (start, end) in enumerate(zip(starts[:-1], starts[1:], strict=True)):
        i, j = round(start * rate), round(end * rate)
        if j >= len(v_cap):
            break
        if np.any((discharges > start) & (discharges <= end)):
            skipped.append(index)
            continue
        gained = harvested_energy(float(v_cap[j]), float(v_cap[i]), c_farad)
        energies.append(gained * J_TO_UJ)
    if skipped:
        logger.warning(f"Skipped {len(skipped)} cycles containing a discharge.")
    return StepEnergies(energies_uj=energies, skipped=skipped)


def trace_step_energy(
    trace: VoltageTrace, c_farad: float, cfg: PipelineConfig | None = None
) -> StepEnergies:
    """Per-step energy of a recorded trace, without simulator events.

    Steps are the cycles the gait pipeline detects in `V_A - V_B`; the energy
    comes from the quantized `V_C` channel. A step during which `V_C` falls by
    more than 0.5 V between samples is taken as a discharge and skipped.
    """
    cfg = cfg or PipelineConfig()
    rate = trace.sample_rate_hz
    clean = denoise(trace.differential(), rate, cfg)
    if cfg.auto_band:
        band = auto_band(clean, rate)
        cfg = attrs.evolve(cfg, bandpass_lo_hz=band.lo_hz, bandpass_hi_hz=band.hi_hz)
    segments = detect_cycles(clean, rate, cfg)
    if not segments:
        msg = "No gait cycles detected in the trace"
        raise SehsInputError(msg)
    v_cap = trace.channel(Channel.V_C.value)

    energies: list[float] = []
    skipped: list[int] = []
    for index, (start, end) in enumerate(segments):
        window = v_cap[start : end + 1]
        if np.any(np.diff(window) < -DISCHARGE_DROP_V):
            skipped.append(index)
            continue
        gained = harvested_energy(float(window[-1]), float(window[0]), c_farad)
        energies.append(gained * J_TO_UJ)
    if skipped:
        logger.warning(f"Skipped {len(skipped)} cycles containing a discharge.")
    return StepEnergies(energies_uj=energies, skipped=skipped)
