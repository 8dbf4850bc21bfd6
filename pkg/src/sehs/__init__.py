"""Simultaneous energy harvesting and sensing with piezoelectric harvesters."""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "CircuitParams",
    "Dataset",
    "EvalReport",
    "FilterConfig",
    "GaitCycle",
    "PipelineConfig",
    "SehsConfigError",
    "SehsDataError",
    "SehsError",
    "SehsInputError",
    "SehsParseError",
    "SehsStructureError",
    "SehsTrainingError",
    "TrainConfig",
    "VoltageTrace",
    "__version__",
    "dtw_distance",
    "filter_trace",
    "simulate",
)

from importlib.metadata import version

from sehs.circuit import CircuitParams, simulate
from sehs.dtw import dtw_distance
from sehs.exceptions import (
    SehsConfigError,
    SehsDataError,
    SehsError,
    SehsInputError,
    SehsParseError,
    SehsStructureError,
    SehsTrainingError,
)
from sehs.filtering import FilterConfig, filter_trace
from sehs.metrics import EvalReport
from sehs.models import Dataset, GaitCycle, VoltageTrace
from sehs.pipeline import PipelineConfig
from sehs.training import TrainConfig

__version__ = version("sehs")
