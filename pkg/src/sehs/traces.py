"""Trace and dataset files.

Trace files are UTF-8 CSV with a `#`-prefixed metadata preamble:

```text
# sample_rate_hz=100.0
# adc_bits=10
# adc_full_scale_v=5.0
t_s,V_A_raw,V_B_raw,V_C_raw
0.0,512,512,0
```

ADC channels are stored as raw integer codes (`<channel>_raw` columns), so a
save/load round-trip is exact at code precision. Derived channels, such as the
filter outputs, are stored as plain float columns.

Dataset files are a JSON array of cycle objects.
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "RAW_SUFFIX",
    "load_dataset",
    "load_trace",
    "save_dataset",
    "save_trace",
)

import csv
import io
import json
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final

import numpy as np

from sehs.adc import codes_to_voltage, quantize_array
from sehs.exceptions import SehsInputError, SehsParseError, SehsStructureError
from sehs.models import (
    RAW_CHANNELS,
    AdcConfig,
    Dataset,
    GaitCycle,
    PehPosition,
    VoltageTrace,
)
from sehs.utils import atomic_write_text

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import NDArray

RAW_SUFFIX: Final = "_raw"
TIME_COLUMN: Final = "t_s"


def save_trace(trace: VoltageTrace, path: Path | str) -> None:
    """Write a trace to a CSV file (atomically)."""
    raw_names = [name for name in RAW_CHANNELS if name in trace.channels]
    float_names = [name for name in trace.channels if name not in RAW_CHANNELS]
    codes = {
        name: quantize_array(trace.channels[name], trace.adc) for name in raw_names
    }

    buffer = io.StringIO()
    buffer.write(f"# sample_rate_hz={trace.sample_rate_hz!r}\n")
    buffer.write(f"# adc_bits={trace.adc.bits}\n")
    buffer.write(f"# adc_full_scale_v={trace.adc.full_scale_v!r}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [TIME_COLUMN, *(f"{name}{RAW_SUFFIX}" for name in raw_names), *float_names]
    )
    times = trace.times_s
    for i in range(len(trace)):
        writer.writerow(
            [
                repr(float(times[i])),
                *(int(codes[name][i]) for name in raw_names),
                *(repr(float(trace.channels[name][i])) for name in float_names),
            ]
        )
    atomic_write_text(path, buffer.getvalue())


def _parse_preamble(lines: list[str]) -> tuple[dict[str, str], int]:
    """Parse `# key=value` lines; returns the metadata and the header index."""
    meta: dict[str, str] = {}
    for index, line in enumerate(lines):
        if not line.startswith("#"):
            return meta, index
        key, sep, value = line[1:].strip().partition("=")
        if not sep:
            msg = f"Metadata line is not key=value: {line!r}"
            raise SehsParseError(msg, line=index + 1, column=1)
        meta[key.strip()] = value.strip()
    return meta, len(lines)


def _meta_value(meta: dict[str, str], key: str, default: str | None = None) -> str:
    value = meta.get(key, default)
    if value is None:
        msg = f"Trace file is missing metadata {key!r}"
        raise SehsParseError(msg)
    return value


def load_trace(path: Path | str) -> VoltageTrace:
    """Read a trace written by `save_trace`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        msg = f"Trace file {path} is empty"
        raise SehsParseError(msg, line=1, column=1)

    meta, header_index = _parse_preamble(lines)
    try:
        sample_rate_hz = float(_meta_value(meta, "sample_rate_hz"))
        adc = AdcConfig(
            bits=int(_meta_value(meta, "adc_bits", "10")),
            full_scale_v=float(_meta_value(meta, "adc_full_scale_v", "5.0")),
        )
    except ValueError as e:
        msg = f"Invalid trace metadata: {e}"
        raise SehsParseError(msg) from e
    if header_index >= len(lines):
        msg = "Trace file has no header row"
        raise SehsParseError(msg, line=header_index + 1, column=1)

    reader = csv.reader(lines[header_index:])
    header = next(reader)
    if not header or header[0] != TIME_COLUMN:
        msg = f"Trace header must start with {TIME_COLUMN!r}"
        raise SehsParseError(msg, line=header_index + 1, column=1)

    columns: list[list[float]] = [[] for _ in header]
    for row_number, row in enumerate(reader, start=header_index + 2):
        if len(row) > len(header):
            msg = f"Row has {len(row)} fields, header has {len(header)}"
            raise SehsParseError(msg, line=row_number, column=len(header) + 1)
        for column_index, cell in enumerate(row):
            name = header[column_index]
            try:
                value = float(int(cell)) if name.endswith(RAW_SUFFIX) else float(cell)
            except ValueError as e:
                msg = f"Invalid value {cell!r} in column {name!r}"
                raise SehsParseError(
                    msg, line=row_number, column=column_index + 1
                ) from e
            columns[column_index].append(value)

    lengths = {name: len(values) for name, values in zip(header, columns, strict=True)}
    if len(set(lengths.values())) != 1:
        msg = f"Channel lengths differ in {path}: {lengths}"
        raise SehsStructureError(msg)

    channels: dict[str, NDArray[np.float64]] = {}
    for name, values in zip(header[1:], columns[1:], strict=True):
        if name.endswith(RAW_SUFFIX):
            try:
                volts = codes_to_voltage(np.array(values, dtype=np.int64), adc)
            except SehsInputError as e:
                msg = f"Column {name!r} holds codes outside the ADC range"
                raise SehsParseError(msg) from e
            channels[name.removesuffix(RAW_SUFFIX)] = volts
        else:
            channels[name] = np.array(values, dtype=np.float64)
    if not channels:
        msg = f"Trace file {path} has no channel columns"
        raise SehsParseError(msg, line=header_index + 1, column=2)
    return VoltageTrace(sample_rate_hz=sample_rate_hz, channels=channels, adc=adc)


def _cycle_to_json(cycle: GaitCycle) -> dict[str, Any]:
    return {
        "subject_id": cycle.subject_id,
        "source_peh": cycle.source_peh.value,
        "original_duration_s": cycle.original_duration_s,
        "samples": [float(x) for x in cycle.samples],
    }


def _cycle_from_json(obj: Any, index: int) -> GaitCycle:  # noqa: ANN401
    if not isinstance(obj, dict):
        msg = f"Dataset entry {index} is not an object"
        raise SehsParseError(msg)
    try:
        return GaitCycle(
            samples=[float(x) for x in obj["samples"]],
            subject_id=int(obj["subject_id"]),
            source_peh=PehPosition(obj.get("source_peh", PehPosition.FRONT.value)),
            original_duration_s=float(obj["original_duration_s"]),
        )
    except KeyError as e:
        msg = f"Dataset entry {index} is missing {e}"
        raise SehsParseError(msg) from e
    except (TypeError, ValueError) as e:
        msg = f"Dataset entry {index} is invalid: {e}"
        raise SehsParseError(msg) from e


def save_dataset(dataset: Dataset, path: Path | str) -> None:
    """Write a dataset to a JSON file (atomically)."""
    payload = [_cycle_to_json(cycle) for cycle in dataset.cycles]
    atomic_write_text(path, json.dumps(payload, indent=None) + "\n")


def load_dataset(path: Path | str) -> Dataset:
    """Read a dataset written by `save_dataset`.

    The subject count is one more than the largest subject id; the dataset is
    flagged balanced when every subject has the same number of cycles.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        msg = f"Malformed dataset file {path}: {e.msg}"
        raise SehsParseError(msg, line=e.lineno, column=e.colno) from e
    if not isinstance(payload, list) or not payload:
        msg = f"Dataset file {path} must hold a non-empty JSON array"
        raise SehsParseError(msg)
    cycles = [_cycle_from_json(obj, i) for i, obj in enumerate(payload)]
    n_subjects = max(cycle.subject_id for cycle in cycles) + 1
    dataset = Dataset(cycles=cycles, n_subjects=n_subjects)
    counts = set(dataset.counts().values())
    if len(counts) == 1:
        return Dataset(
            cycles=cycles, n_subjects=n_subjects, cycles_per_subject=counts.pop()
        )
    return dataset
