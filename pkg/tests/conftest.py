"""Pytest configuration for sehs.

Fixtures build small, fully deterministic traces and datasets so that unit
tests stay fast; population-sized runs live in `tests/slow`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest
from loguru import logger

from sehs.adc import codes_to_voltage
from sehs.circuit import CircuitParams
from sehs.models import Dataset, GaitCycle, PehPosition, VoltageTrace

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

    from _pytest.logging import LogCaptureFixture

# Cycle length of the toy datasets.
_TOY_LEN = 32


@pytest.fixture
def caplog(caplog: LogCaptureFixture) -> Iterator[LogCaptureFixture]:
    """Route loguru records into pytest's caplog."""
    handler_id = logger.add(caplog.handler, format="{message}", level="DEBUG")
    yield caplog
    logger.remove(handler_id)


@pytest.fixture
def small_trace() -> VoltageTrace:
    """Five-sample trace whose ADC channels hold exact code voltages."""
    codes = {
        "V_A": [512, 600, 700, 512, 400],
        "V_B": [400, 420, 380, 512, 600],
        "V_C": [0, 10, 20, 30, 40],
    }
    return VoltageTrace(
        sample_rate_hz=100.0,
        channels={name: codes_to_voltage(c) for name, c in codes.items()},
    )


@pytest.fixture
def fast_circuit() -> CircuitParams:
    """Circuit with a one-second time constant for closed-form checks."""
    return CircuitParams(r_internal_ohm=900.0, r_match_ohm=100.0, c_farad=1e-3)


@pytest.fixture
def make_dataset() -> Callable[..., Dataset]:
    """Factory for balanced datasets of noisy constant-level cycles.

    Subject `i` walks at level `i * spacing`; every cycle adds Gaussian noise.
    """

    def _make(
        n_subjects: int = 3,
        per_subject: int = 20,
        length: int = _TOY_LEN,
        spacing: float = 0.5,
        noise: float = 0.05,
        seed: int = 0,
    ) -> Dataset:
        rng = np.random.default_rng(seed)
        cycles = [
            GaitCycle(
                samples=subject * spacing + rng.normal(0.0, noise, length),
                subject_id=subject,
                source_peh=PehPosition.FRONT,
                original_duration_s=1.0,
            )
            for subject in range(n_subjects)
            for _ in range(per_subject)
        ]
        return Dataset.balanced(cycles, per_subject, n_subjects)

    return _make
