"""ADC conversion."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "adc_quantize",
    "adc_to_voltage",
    "codes_to_voltage",
    "quantize_array",
)

from typing import TYPE_CHECKING

import numpy as np

from sehs.exceptions import SehsInputError
from sehs.models import AdcConfig

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray

_DEFAULT_ADC = AdcConfig()


def adc_quantize(v: float, cfg: AdcConfig = _DEFAULT_ADC) -> int:
    """Raw code of a voltage; out-of-range voltages clip to the rails.

    Half-way voltages round up to the next code.
    """
    return int(quantize_array(v, cfg))


def adc_to_voltage(raw: int, cfg: AdcConfig = _DEFAULT_ADC) -> float:
    """Voltage of a raw code: `full_scale_v * raw / 2**bits`."""
    if not 0 <= raw < cfg.levels:
        msg = f"Raw code {raw} outside [0, {cfg.levels})"
        raise SehsInputError(msg)
    return cfg.full_scale_v * raw / cfg.levels


def quantize_array(v: ArrayLike, cfg: AdcConfig = _DEFAULT_ADC) -> NDArray[np.int64]:
    """Vectorised `adc_quantize`."""
    scaled = np.asarray(v, dtype=np.float64) / cfg.full_scale_v * cfg.levels
    codes = np.floor(scaled + 0.5)
    return np.clip(codes, 0, cfg.levels - 1).astype(np.int64)


def codes_to_voltage(
    raw: ArrayLike, cfg: AdcConfig = _DEFAULT_ADC
) -> NDArray[np.float64]:
    """Vectorised `adc_to_voltage`."""
    codes = np.asarray(raw)
    if codes.size and (codes.min() < 0 or codes.max() >= cfg.levels):
        msg = f"Raw codes outside [0, {cfg.levels})"
        raise SehsInputError(msg)
    return cfg.full_scale_v * codes.astype(np.float64) / cfg.levels
