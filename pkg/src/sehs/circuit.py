"""Harvester circuit simulation.

Lumped model of a piezoelectric harvester (open-circuit source behind its
internal resistance) loaded by a matching resistor and a full-bridge rectifier
that charges a storage capacitor. Two ADC channels sample the harvester
terminals (`V_A`, `V_B`) and a third samples the capacitor (`V_C`).

The rectifier conducts iff `|v_src| > v_cap + 2 * v_diode`; the charging
current is then `(|v_src| - v_cap - 2 * v_diode) / (r_internal + r_match)`.
The idle half of the bridge holds the return terminal of the harvester at
`return_ratio * v_cap`. While conducting, the high terminal sits one diode drop
plus the matching-resistor drop above the capacitor. While blocked, only the
matching resistor loads the source, so the terminals differ by the divider
voltage `v_src * r_match / (r_internal + r_match)`.
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "CircuitParams",
    "EventKind",
    "SimEvent",
    "SimResult",
    "charging_current",
    "harvested_energy",
    "rc_charge_voltage",
    "simulate",
)

import math
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple

import attrs
import numpy as np
from loguru import logger
from numba import njit

from sehs.adc import codes_to_voltage, quantize_array
from sehs.exceptions import SehsConfigError, SehsInputError
from sehs.models import AdcConfig, Channel, VoltageTrace
from sehs.utils import non_negative, positive

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray

_STEP_RATE_TOLERANCE = 1e-9


@attrs.frozen
class CircuitParams:
    """Lumped-element circuit description.

    Attributes:
        r_internal_ohm: Internal resistance of the harvester.
        r_match_ohm: Matching resistor across the harvester output.
        c_farad: Storage capacitance.
        v_diode: Forward drop of one rectifier diode.
        sim_step_s: Integrator step.
        discharge_period_s: The capacitor is emptied at every multiple of this
            period.
        v_cap_init: Capacitor voltage after a discharge.
        return_ratio: Fraction of the capacitor voltage seen at the return
            terminal of the harvester.

    The default matching resistor keeps the high terminal below the 5 V ADC
    reference through a full charge window of the default population.
    """

    r_internal_ohm: float = attrs.field(default=1e6, validator=positive())
    r_match_ohm: float = attrs.field(default=2000.0, validator=positive())
    c_farad: float = attrs.field(default=1000e-6, validator=positive())
    v_diode: float = attrs.field(default=0.3, validator=non_negative())
    sim_step_s: float = attrs.field(default=1e-3, validator=positive())
    discharge_period_s: float = attrs.field(default=50.0, validator=positive())
    v_cap_init: float = attrs.field(default=0.0, validator=non_negative())
    return_ratio: float = attrs.field(default=0.8, validator=non_negative())

    @v_diode.validator
    def _check_v_diode(self, _attribute: attrs.Attribute[object], value: float) -> None:
        if value >= 1:
            msg = f"v_diode must be below 1 V, got {value}"
            raise SehsConfigError(msg)

    @return_ratio.validator
    def _check_return_ratio(
        self, _attribute: attrs.Attribute[object], value: float
    ) -> None:
        if value >= 1:
            msg = f"return_ratio must be below 1, got {value}"
            raise SehsConfigError(msg)

    @property
    def time_constant_s(self) -> float:
        """Charging time constant `(r_internal + r_match) * C`."""
        return (self.r_internal_ohm + self.r_match_ohm) * self.c_farad

    @property
    def divider_gain(self) -> float:
        """Share of the source voltage across the matching resistor."""
        return self.r_match_ohm / (self.r_internal_ohm + self.r_match_ohm)

    @property
    def step_rate_hz(self) -> float:
        """Integrator rate."""
        return 1.0 / self.sim_step_s

    def decimation(self, out_rate_hz: float) -> int:
        """Integrator steps per output sample.

        Raises:
            SehsConfigError: If the output rate does not divide the step rate
                or exceeds half of it.
        """
        if out_rate_hz <= 0:
            msg = f"Output rate must be positive, got {out_rate_hz}"
            raise SehsConfigError(msg)
        if self.sim_step_s > 1.0 / (2.0 * out_rate_hz):
            msg = (
                f"Integrator step {self.sim_step_s} s is too coarse for "
                f"{out_rate_hz} Hz output (needs at most {1 / (2 * out_rate_hz)} s)"
            )
            raise SehsConfigError(msg)
        ratio = self.step_rate_hz / out_rate_hz
        factor = round(ratio)
        if abs(ratio - factor) > _STEP_RATE_TOLERANCE * ratio:
            msg = (
                f"Output rate {out_rate_hz} Hz does not divide the "
                f"{self.step_rate_hz} Hz integrator rate"
            )
            raise SehsConfigError(msg)
        return factor


class EventKind(Enum):
    """Simulation event kinds."""

    CYCLE_START = "CycleStart"
    CAP_DISCHARGE = "CapDischarge"


class SimEvent(NamedTuple):
    """Simulation event."""

    time_s: float
    kind: EventKind


def _array_eq(a: NDArray[np.generic], b: NDArray[np.generic]) -> bool:
    return bool(np.array_equal(a, b))


@attrs.frozen
class SimResult:
    """Simulation output at the output sample rate.

    Attributes:
        trace: ADC-quantized `V_A`, `V_B`, `V_C`.
        v_source: Ground-truth open-circuit source voltage.
        events: Cycle starts and capacitor discharges, in time order.
        v_cap: Continuous (unquantized) capacitor voltage.
        conducting: Whether the rectifier conducts at each sample.
        source_energy_j: Energy drawn from the source by the charging current.
        delivered_energy_j: Energy stored into the capacitor, discharges excluded.
    """

    trace: VoltageTrace
    v_source: NDArray[np.float64] = attrs.field(eq=attrs.cmp_using(eq=_array_eq))
    events: tuple[SimEvent, ...]
    v_cap: NDArray[np.float64] = attrs.field(eq=attrs.cmp_using(eq=_array_eq))
    conducting: NDArray[np.bool_] = attrs.field(eq=attrs.cmp_using(eq=_array_eq))
    source_energy_j: float
    delivered_energy_j: float

    @property
    def cycle_starts(self) -> list[float]:
        """Times of the cycle-start events."""
        return [e.time_s for e in self.events if e.kind is EventKind.CYCLE_START]

    @property
    def discharges(self) -> list[float]:
        """Times of the capacitor discharges."""
        return [e.time_s for e in self.events if e.kind is EventKind.CAP_DISCHARGE]


@njit(nogil=True, cache=False)  # type: ignore[misc]
def _integrate(
    v_source: NDArray[np.float64],
    dt: float,
    r_total: float,
    c_farad: float,
    v_diode: float,
    v_cap_init: float,
    reset_every: int,
) -> tuple[NDArray[np.float64], NDArray[np.float64], float, float]:
    """Explicit Euler over the capacitor voltage.

    Returns the capacitor voltage sampled before each step, the charging current
    of each step, the source energy and the delivered energy.
    """
    n = v_source.shape[0]
    v_cap = np.empty(n)
    current = np.empty(n)
    v = v_cap_init
    source_energy = 0.0
    delivered = 0.0
    for k in range(n):
        if k > 0 and k % reset_every == 0:
            v = v_cap_init
        v_cap[k] = v
        s = abs(v_source[k])
        drive = s - v - 2.0 * v_diode
        if drive > 0.0:
            i = drive / r_total
            v_next = v + i * dt / c_farad
            delivered += 0.5 * c_farad * (v_next * v_next - v * v)
            source_energy += s * i * dt
            v = v_next
        else:
            i = 0.0
        current[k] = i
    return v_cap, current, source_energy, delivered


def _node_voltages(
    params: CircuitParams,
    v_source: NDArray[np.float64],
    v_cap: NDArray[np.float64],
    current: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Terminal voltages `V_A`, `V_B` for each step."""
    low = params.return_ratio * v_cap
    high = np.where(
        current > 0,
        v_cap + params.v_diode + params.r_match_ohm * current,
        low + params.divider_gain * np.abs(v_source),
    )
    positive_half = v_source >= 0
    return np.where(positive_half, high, low), np.where(positive_half, low, high)


def simulate(
    params: CircuitParams,
    v_source: ArrayLike,
    out_rate_hz: float,
    *,
    cycle_marks: ArrayLike | None = None,
    adc: AdcConfig | None = None,
) -> SimResult:
    """Simulate the circuit and sample it with the ADC.

    Args:
        params: Circuit description.
        v_source: Open-circuit source voltage sampled at `1 / params.sim_step_s`.
        out_rate_hz: ADC sampling rate; must divide the integrator rate.
        cycle_marks: Ground-truth cycle boundaries, emitted as cycle-start events.
        adc: ADC used for the output channels.

    Raises:
        SehsConfigError: If the output rate violates the integrator step.
        SehsInputError: If the source is empty.
    """
    adc = adc or AdcConfig()
    factor = params.decimation(out_rate_hz)
    source = np.ascontiguousarray(v_source, dtype=np.float64)
    if source.ndim != 1 or source.size == 0:
        msg = "v_source must be a non-empty 1-D vector"
        raise SehsInputError(msg)

    reset_every = max(1, round(params.discharge_period_s / params.sim_step_s))
    v_cap, current, source_energy, delivered = _integrate(
        source,
        params.sim_step_s,
        params.r_internal_ohm + params.r_match_ohm,
        params.c_farad,
        params.v_diode,
        params.v_cap_init,
        reset_every,
    )
    v_a, v_b = _node_voltages(params, source, v_cap, current)

    out = slice(None, None, factor)
    channels = {
        Channel.V_A.value: v_a[out],
        Channel.V_B.value: v_b[out],
        Channel.V_C.value: v_cap[out],
    }
    quantized: dict[str, NDArray[np.float64]] = {}
    for name, volts in channels.items():
        clipped = int(np.count_nonzero((volts < 0) | (volts >= adc.full_scale_v)))
        if clipped:
            logger.warning(f"{clipped} samples of {name} clipped at the ADC rails.")
        quantized[name] = codes_to_voltage(quantize_array(volts, adc), adc)
    trace = VoltageTrace(sample_rate_hz=out_rate_hz, channels=quantized, adc=adc)

    duration_s = source.size * params.sim_step_s
    events = [
        SimEvent(
            time_s=k * reset_every * params.sim_step_s, kind=EventKind.CAP_DISCHARGE
        )
        for k in range(1, (source.size - 1) // reset_every + 1)
    ]
    if cycle_marks is not None:
        events.extend(
            SimEvent(time_s=float(t), kind=EventKind.CYCLE_START)
            for t in np.asarray(cycle_marks, dtype=np.float64)
            if 0.0 <= t < duration_s
        )
    events.sort(key=lambda e: (e.time_s, e.kind.value))

    logger.debug(
        f"Simulated {duration_s:.1f} s: V_C peak {float(v_cap.max()):.3f} V, "
        f"{delivered * 1e3:.3f} mJ delivered."
    )
    return SimResult(
        trace=trace,
        v_source=source[out].copy(),
        events=tuple(events),
        v_cap=v_cap[out].copy(),
        conducting=(current[out] > 0),
        source_energy_j=float(source_energy),
        delivered_energy_j=float(delivered),
    )


def charging_current(
    v_cap: float,  # noqa: ARG001
    i0: float,
    rc_s: float,
    t_s: float,
) -> float:
    """Closed-form charging current `i0 * exp(-t / RC)` of an RC circuit."""
    if rc_s <= 0:
        msg = f"rc_s must be positive, got {rc_s}"
        raise SehsInputError(msg)
    return i0 * math.exp(-t_s / rc_s)


def rc_charge_voltage(
    v_final: float, rc_s: float, t_s: ArrayLike, v_init: float = 0.0
) -> NDArray[np.float64]:
    """Closed-form capacitor voltage charging from `v_init` towards `v_final`."""
    decay = np.exp(-np.asarray(t_s, dtype=np.float64) / rc_s)
    return v_final + (v_init - v_final) * decay


def harvested_energy(v_cap_final: float, v_cap_init: float, c_farad: float) -> float:
    """Energy gained by a capacitor, `C * (v_final**2 - v_init**2) / 2`."""
    if c_farad <= 0:
        msg = f"c_farad must be positive, got {c_farad}"
        raise SehsInputError(msg)
    return 0.5 * c_farad * (v_cap_final**2 - v_cap_init**2)
