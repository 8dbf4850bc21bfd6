"""Capacitor-voltage distortion filter.

Every ADC sample of a harvester terminal is compensated against the capacitor
voltage sampled at the same instant:

- if `v >= v_c` (the terminal is above the capacitor, the charging branch), the
  capacitor offset is replaced by the constant `V*`: `v' = v - v_c + V*`;
- otherwise the sample is rescaled: `v' = V* * v / v_c`.

The filtered signal is the difference of the compensated terminals.
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "BranchCounter",
    "FilterConfig",
    "FilteredSample",
    "filter_sample",
    "filter_trace",
)

from typing import TYPE_CHECKING, NamedTuple

import attrs
import numpy as np

from sehs.exceptions import SehsInputError
from sehs.models import Channel, VoltageTrace
from sehs.utils import positive

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import NDArray


@attrs.frozen
class FilterConfig:
    """Filter configuration.

    Attributes:
        v_star: Compensation constant that replaces the capacitor voltage.
    """

    v_star: float = attrs.field(default=2.0, validator=positive())


@attrs.define
class BranchCounter:
    """Counts branch evaluations performed by the filter."""

    evaluations: int = 0

    def record(self, n: int) -> None:
        """Add `n` evaluations."""
        self.evaluations += n


class FilteredSample(NamedTuple):
    """Filtered terminals and their difference."""

    v_a: float
    v_b: float
    v: float


def _compensate(
    v: NDArray[np.float64],
    v_c: NDArray[np.float64],
    v_star: float,
    counter: BranchCounter | None,
) -> NDArray[np.float64]:
    charging = v >= v_c
    if counter is not None:
        counter.record(charging.size)
    # Rescaled samples satisfy 0 <= v < v_c, so the ratio lies in [0, 1).
    ratio = np.divide(v, v_c, out=np.zeros(np.shape(v)), where=~charging)
    return np.where(charging, v - v_c + v_star, v_star * ratio)


def _check_non_negative(**samples: NDArray[np.float64]) -> None:
    for name, values in samples.items():
        if np.any(values < 0):
            msg = f"{name} must be non-negative ADC voltages"
            raise SehsInputError(msg)


def filter_sample(
    v_a: float,
    v_b: float,
    v_c: float,
    cfg: FilterConfig | None = None,
    *,
    counter: BranchCounter | None = None,
) -> FilteredSample:
    """Filter one sample of the two terminals against the capacitor voltage."""
    cfg = cfg or FilterConfig()
    a, b, c = (np.asarray(x, dtype=np.float64) for x in (v_a, v_b, v_c))
    _check_non_negative(v_a=a, v_b=b, v_c=c)
    a_f = float(_compensate(a, c, cfg.v_star, counter))
    b_f = float(_compensate(b, c, cfg.v_star, counter))
    return FilteredSample(v_a=a_f, v_b=b_f, v=a_f - b_f)


def filter_trace(
    trace: VoltageTrace,
    cfg: FilterConfig | None = None,
    *,
    counter: BranchCounter | None = None,
) -> VoltageTrace:
    """Filter a whole trace in one pass.

    Returns a trace at the same sample rate with channels `V_A_f`, `V_B_f` and
    `V_f`.

    Raises:
        SehsStructureError: If `V_A`, `V_B` or `V_C` is missing.
        SehsInputError: If any sample is negative.
    """
    cfg = cfg or FilterConfig()
    v_a = trace.channel(Channel.V_A)
    v_b = trace.channel(Channel.V_B)
    v_c = trace.channel(Channel.V_C)
    _check_non_negative(V_A=v_a, V_B=v_b, V_C=v_c)
    a_f = _compensate(v_a, v_c, cfg.v_star, counter)
    b_f = _compensate(v_b, v_c, cfg.v_star, counter)
    return VoltageTrace(
        sample_rate_hz=trace.sample_rate_hz,
        channels={
            Channel.V_A_F.value: a_f,
            Channel.V_B_F.value: b_f,
            Channel.V_F.value: a_f - b_f,
        },
        adc=trace.adc,
    )
