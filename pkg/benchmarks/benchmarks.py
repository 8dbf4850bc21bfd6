"""Benchmarks for the hot paths of sehs."""

from __future__ import annotations

import numpy as np

from sehs.circuit import CircuitParams, SimResult, simulate
from sehs.dtw import dtw_distance
from sehs.filtering import filter_trace
from sehs.synth import SubjectProfile, synth_excitation


class DtwSuite:
    """DTW between two resampled cycles."""

    params = (65, 130, 260)
    param_names = ("length",)

    def setup(self, length: int) -> None:
        """Draw two noisy cycles."""
        rng = np.random.default_rng(0)
        t = np.linspace(0, 2 * np.pi, length)
        self.a = np.sin(t) + rng.normal(0, 0.05, length)
        self.b = np.sin(t + 0.2) + rng.normal(0, 0.05, length)
        dtw_distance(self.a[:2], self.b[:2])

    def time_dtw_distance(self, _length: int) -> None:
        """One distance."""
        dtw_distance(self.a, self.b)


class CircuitSuite:
    """A minute of walking through the harvesting circuit."""

    timeout = 120.0

    def setup(self) -> None:
        """Synthesize the source waveform and warm the integrator up."""
        self.walk = synth_excitation(SubjectProfile(subject_id=0), 60.0, seed=0)
        self.params = CircuitParams()
        self.sim: SimResult = simulate(
            self.params, self.walk.v_source, 100.0, cycle_marks=self.walk.cycle_marks
        )

    def time_simulate(self) -> None:
        """Integrate and sample."""
        simulate(
            self.params, self.walk.v_source, 100.0, cycle_marks=self.walk.cycle_marks
        )

    def time_filter_trace(self) -> None:
        """Filter the sampled trace."""
        filter_trace(self.sim.trace)
