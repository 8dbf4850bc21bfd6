"""End-to-end experiments on a synthetic population.

Each subject walks once; the same walk is recorded by the front and the rear
harvester. The recordings feed the gait pipeline either unfiltered
(`V_A - V_B`) or through the distortion filter (`V_f`).
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "RATE_GRID",
    "SIZE_GRID",
    "V_STAR_GRID",
    "ClassifierRow",
    "DistortionReport",
    "ExperimentConfig",
    "Histogram",
    "PopulationData",
    "SimilarityRow",
    "SubjectRun",
    "SweepKind",
    "SweepRow",
    "build_population_dataset",
    "classifier_table",
    "distortion_report",
    "duration_histogram",
    "pearson_report",
    "reproduce",
    "signal_of",
    "similarity_report",
    "simulate_population",
    "simulate_subject",
    "sweep",
    "write_sweep_csv",
)

import csv
import io
import json
from collections import defaultdict
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final, NamedTuple

import attrs
import numpy as np
from loguru import logger
from scipy import stats
from tqdm import tqdm

from sehs.circuit import CircuitParams, SimResult, simulate
from sehs.energy import (
    ONE_ADC_AMP_PROFILE,
    SEHS_PROFILE,
    energy_per_event,
    harvest_improvement,
    overall_power,
    per_step_energy,
    power_reduction,
)
from sehs.exceptions import SehsInputError
from sehs.filtering import FilterConfig, filter_trace
from sehs.models import Channel, Dataset, PehPosition
from sehs.pipeline import (
    PipelineConfig,
    SegmentationReport,
    build_dataset,
    extract_cycles,
    gait_similarity,
    resample_dataset,
)
from sehs.synth import (
    PopulationConfig,
    SubjectProfile,
    draw_population,
    rear_profile,
    synth_excitation,
)
from sehs.training import ModelKind, TrainConfig, train_classifier
from sehs.utils import atomic_write_text, line_fit, positive, subject_seed

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterable, Sequence

    from numpy.typing import ArrayLike, NDArray

    from sehs.metrics import EvalReport

V_STAR_GRID: Final = (0.5, 1.0, 2.0, 3.0, 4.0)
RATE_GRID: Final = (10.0, 20.0, 30.0, 40.0, 60.0, 80.0, 100.0)
SIZE_GRID: Final = (25, 50, 100, 150, 200)
HISTOGRAM_RANGE_S: Final = (0.5, 2.0)


@attrs.frozen
class ExperimentConfig:
    """Everything an end-to-end run depends on.

    Attributes:
        n_subjects: Synthetic subjects.
        cycles_per_subject: Cycles kept per subject in every dataset.
        sample_rate_hz: ADC sampling rate.
        seed: Global seed; subject `i` uses `seed + i`.
        circuit: Harvester circuit.
        population: Ranges the subjects are drawn from.
        filter: Distortion filter.
        pipeline: Gait pipeline.
        train: Training protocol.
        hidden_units: LSTM hidden units.
        knn_k: KNN neighbours.
        max_pairs: Pairs sampled per subject for the similarity report.
    """

    n_subjects: int = attrs.field(default=20, validator=positive())
    cycles_per_subject: int = attrs.field(default=250, validator=positive())
    sample_rate_hz: float = attrs.field(default=100.0, validator=positive())
    seed: int = 7
    circuit: CircuitParams = attrs.Factory(CircuitParams)
    population: PopulationConfig = attrs.Factory(PopulationConfig)
    filter: FilterConfig = attrs.Factory(FilterConfig)
    pipeline: PipelineConfig = attrs.Factory(PipelineConfig)
    train: TrainConfig = attrs.Factory(TrainConfig)
    hidden_units: int = attrs.field(default=32, validator=positive())
    knn_k: int = attrs.field(default=10, validator=positive())
    max_pairs: int = attrs.field(default=1000, validator=positive())

    @property
    def walk_s(self) -> float:
        """Walking time per subject, with a margin for rejected cycles."""
        return 1.5 * self.cycles_per_subject + 20.0


class SubjectRun(NamedTuple):
    """One subject's walk as recorded by one harvester."""

    subject_id: int
    position: PehPosition
    sim: SimResult


def simulate_subject(
    profile: SubjectProfile, position: PehPosition, cfg: ExperimentConfig
) -> SubjectRun:
    """Simulate one subject's walk on one harvester.

    Both harvesters see the same walk: the cycle timing and noise come from the
    subject's sub-seed, only the waveform differs.
    """
    if position is PehPosition.REAR:
        profile = rear_profile(profile)
    excitation = synth_excitation(
        profile,
        cfg.walk_s,
        subject_seed(cfg.seed, profile.subject_id),
        step_s=cfg.circuit.sim_step_s,
    )
    sim = simulate(
        cfg.circuit,
        excitation.v_source,
        cfg.sample_rate_hz,
        cycle_marks=excitation.cycle_marks,
    )
    return SubjectRun(subject_id=profile.subject_id, position=position, sim=sim)


def simulate_population(
    cfg: ExperimentConfig, position: PehPosition, *, progress: bool = False
) -> list[SubjectRun]:
    """Simulate every subject on one harvester."""
    profiles = draw_population(cfg.population, cfg.n_subjects, cfg.seed)
    runs = [
        simulate_subject(profile, position, cfg)
        for profile in tqdm(profiles, disable=not progress, unit="subject")
    ]
    logger.info(f"Simulated {len(runs)} subjects on the {position.value} harvester.")
    return runs


def signal_of(
    run: SubjectRun, *, filtered: bool, v_star: float | None = None
) -> NDArray[np.float64]:
    """Sensing signal of a run: `V_f` when filtered, else `V_A - V_B`."""
    if not filtered:
        return run.sim.trace.differential()
    cfg = FilterConfig() if v_star is None else FilterConfig(v_star=v_star)
    return filter_trace(run.sim.trace, cfg).channel(Channel.V_F.value)


class PopulationData(NamedTuple):
    """Balanced dataset of a population and the segmentation reports."""

    dataset: Dataset
    reports: list[SegmentationReport]


def build_population_dataset(
    runs: Sequence[SubjectRun],
    cfg: ExperimentConfig,
    *,
    filtered: bool,
    v_star: float | None = None,
) -> PopulationData:
    """Run the gait pipeline on every subject and balance the result."""
    v_star = cfg.filter.v_star if v_star is None else v_star
    extractions = [
        extract_cycles(
            signal_of(run, filtered=filtered, v_star=v_star),
            cfg.sample_rate_hz,
            run.subject_id,
            cfg.pipeline,
            source_peh=run.position,
        )
        for run in runs
    ]
    dataset = build_dataset(extractions, cfg.cycles_per_subject, len(runs))
    return PopulationData(
        dataset=dataset, reports=[extraction.report for extraction in extractions]
    )


def pearson_report(
    runs: Iterable[SubjectRun], v_star: float | None = None
) -> list[float]:
    """Correlation between the filtered and the unfiltered signal of every run."""
    return [
        float(
            stats.pearsonr(
                signal_of(run, filtered=True, v_star=v_star),
                signal_of(run, filtered=False),
            ).statistic
        )
        for run in runs
    ]


@attrs.frozen
class DistortionReport:
    """Dependence of the per-cycle signal amplitude on the capacitor voltage.

    Attributes:
        slope_raw: Slope of unfiltered peak-to-peak against capacitor voltage.
        p_raw: Two-sided p-value of `slope_raw`.
        slope_filtered: Slope of filtered peak-to-peak against capacitor voltage.
        p_filtered: Two-sided p-value of `slope_filtered`.
        cycles: Cycles entering the fits.
    """

    slope_raw: float
    p_raw: float
    slope_filtered: float
    p_filtered: float
    cycles: int

    @property
    def reduction(self) -> float:
        """Relative reduction of the slope magnitude by the filter."""
        if self.slope_raw == 0:
            return 0.0
        return 1.0 - abs(self.slope_filtered) / abs(self.slope_raw)


def distortion_report(run: SubjectRun, v_star: float | None = None) -> DistortionReport:
    """Fit per-cycle peak-to-peak amplitude against the mean capacitor voltage.

    Cycles are the spans between consecutive cycle starts; spans containing a
    discharge are left out.
    """
    sim = run.sim
    rate = sim.trace.sample_rate_hz
    raw = signal_of(run, filtered=False)
    filtered = signal_of(run, filtered=True, v_star=v_star)
    discharges = np.asarray(sim.discharges, dtype=np.float64)
    starts = sim.cycle_starts

    v_c: list[float] = []
    p2p_raw: list[float] = []
    p2p_filtered: list[float] = []
    for start, end in zip(starts[:-1], starts[1:], strict=True):
        i, j = round(start * rate), round(end * rate)
        if j > len(raw) or np.any((discharges > start) & (discharges <= end)):
            continue
        v_c.append(float(sim.v_cap[i:j].mean()))
        p2p_raw.append(float(np.ptp(raw[i:j])))
        p2p_filtered.append(float(np.ptp(filtered[i:j])))
    if len(v_c) < 3:  # noqa: PLR2004
        msg = f"Subject {run.subject_id} has too few complete cycles to fit"
        raise SehsInputError(msg)
    fit_raw = line_fit(v_c, p2p_raw)
    fit_filtered = line_fit(v_c, p2p_filtered)
    return DistortionReport(
        slope_raw=fit_raw.slope,
        p_raw=fit_raw.p_value,
        slope_filtered=fit_filtered.slope,
        p_filtered=fit_filtered.p_value,
        cycles=len(v_c),
    )


class SimilarityRow(NamedTuple):
    """Mean pairwise DTW distance of one subject's cycles."""

    subject_id: int
    raw: float
    filtered: float

    @property
    def ratio(self) -> float:
        """How many times closer the filtered cycles are."""
        return self.raw / self.filtered if self.filtered > 0 else float("inf")


def _by_subject(dataset: Dataset) -> dict[int, list[NDArray[np.float64]]]:
    grouped: defaultdict[int, list[NDArray[np.float64]]] = defaultdict(list)
    for cycle in dataset.cycles:
        grouped[cycle.subject_id].append(cycle.samples)
    return grouped


def similarity_report(
    raw: Dataset, filtered: Dataset, cfg: ExperimentConfig
) -> list[SimilarityRow]:
    """Per-subject gait similarity of unfiltered against filtered cycles."""
    raw_cycles = _by_subject(raw)
    filtered_cycles = _by_subject(filtered)
    rows = [
        SimilarityRow(
            subject_id=subject_id,
            raw=gait_similarity(
                raw_cycles[subject_id],
                max_pairs=cfg.max_pairs,
                seed=subject_seed(cfg.seed, subject_id),
            ),
            filtered=gait_similarity(
                filtered_cycles[subject_id],
                max_pairs=cfg.max_pairs,
                seed=subject_seed(cfg.seed, subject_id),
            ),
        )
        for subject_id in range(raw.n_subjects)
    ]
    worst = min(row.ratio for row in rows)
    logger.info(f"Filtered cycles are at least {worst:.2f}x closer (DTW).")
    return rows


class Histogram(NamedTuple):
    """Counts over equal-width bins."""

    edges: list[float]
    counts: list[int]


def duration_histogram(durations_s: ArrayLike, bins: int = 30) -> Histogram:
    """Histogram of cycle durations over [0.5, 2] s."""
    counts, edges = np.histogram(
        np.asarray(durations_s, dtype=np.float64), bins=bins, range=HISTOGRAM_RANGE_S
    )
    return Histogram(edges=edges.tolist(), counts=counts.tolist())


class ClassifierRow(NamedTuple):
    """Held-out performance of one classifier on one dataset."""

    kind: ModelKind
    position: PehPosition
    filtered: bool
    report: EvalReport


def classifier_table(
    datasets: dict[tuple[PehPosition, bool], Dataset],
    cfg: ExperimentConfig,
    kinds: Iterable[ModelKind] = tuple(ModelKind),
    *,
    progress: bool = False,
) -> list[ClassifierRow]:
    """Train and test every classifier family on every dataset."""
    rows: list[ClassifierRow] = []
    for (position, filtered), dataset in datasets.items():
        for kind in kinds:
            _, report = train_classifier(
                kind,
                dataset,
                cfg.train,
                sample_rate_hz=cfg.sample_rate_hz,
                hidden_units=cfg.hidden_units,
                k=cfg.knn_k,
                progress=progress,
            )
            rows.append(ClassifierRow(kind, position, filtered, report))
    return rows


class SweepKind(Enum):
    """Parameter swept by `sweep`."""

    V_STAR = "v_star"
    SAMPLING_RATE = "sampling_rate"
    TRAINING_SIZE = "training_size"


class SweepRow(NamedTuple):
    """Performance at one grid point."""

    point: float
    report: EvalReport


def _sweep_dataset(
    kind: SweepKind,
    point: float,
    runs: Sequence[SubjectRun],
    base: Dataset | None,
    cfg: ExperimentConfig,
) -> tuple[Dataset, float]:
    if kind is SweepKind.V_STAR:
        data = build_population_dataset(runs, cfg, filtered=True, v_star=point)
        return data.dataset, cfg.sample_rate_hz
    if base is None:
        msg = f"A {kind.value} sweep needs a base dataset"
        raise SehsInputError(msg)
    if kind is SweepKind.SAMPLING_RATE:
        return resample_dataset(base, point, cfg.sample_rate_hz), point
    return base.take(int(point)), cfg.sample_rate_hz


def sweep(  # noqa: PLR0913
    kind: SweepKind,
    grid: Sequence[float],
    cfg: ExperimentConfig,
    runs: Sequence[SubjectRun],
    *,
    model: ModelKind = ModelKind.BILSTM,
    base: Dataset | None = None,
    progress: bool = False,
) -> list[SweepRow]:
    """Re-run pipeline and training at every grid point with the seed fixed.

    `runs` are the simulated subjects; `base` is their filtered dataset, built
    when not given.
    """
    if not grid:
        msg = "Sweep grid is empty"
        raise SehsInputError(msg)
    if base is None and kind is not SweepKind.V_STAR:
        base = build_population_dataset(runs, cfg, filtered=True).dataset
    rows: list[SweepRow] = []
    for point in tqdm(grid, disable=not progress, unit="point"):
        dataset, rate = _sweep_dataset(kind, float(point), runs, base, cfg)
        _, report = train_classifier(
            model,
            dataset,
            cfg.train,
            sample_rate_hz=rate,
            hidden_units=cfg.hidden_units,
            k=cfg.knn_k,
        )
        logger.info(f"{kind.value}={point}: macro recall {report.macro_recall:.3f}.")
        rows.append(SweepRow(point=float(point), report=report))
    return rows


SWEEP_COLUMNS: Final = (
    "macro_precision",
    "macro_recall",
    "micro_recall",
    "precision_std",
    "recall_std",
)


def write_sweep_csv(
    kind: SweepKind, rows: Sequence[SweepRow], path: Path | str
) -> None:
    """Write a sweep table as CSV (atomically)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow((kind.value, *SWEEP_COLUMNS))
    for row in rows:
        writer.writerow(
            (repr(row.point), *(repr(getattr(row.report, c)) for c in SWEEP_COLUMNS))
        )
    atomic_write_text(path, buffer.getvalue())


def _power_summary() -> dict[str, Any]:
    return {
        "sehs_uw": overall_power(SEHS_PROFILE),
        "one_adc_amp_uw": overall_power(ONE_ADC_AMP_PROFILE),
        "sehs_event_uj": energy_per_event(SEHS_PROFILE),
        "one_adc_amp_event_uj": energy_per_event(ONE_ADC_AMP_PROFILE),
        "reduction_pct": power_reduction(SEHS_PROFILE, ONE_ADC_AMP_PROFILE),
    }


def _mean_step_energy(runs: Iterable[SubjectRun], c_farad: float) -> float:
    means = [
        float(np.mean(per_step_energy(run.sim, c_farad).energies_uj)) for run in runs
    ]
    return float(np.mean(means))


def _report_row(report: EvalReport) -> dict[str, float]:
    return {
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "micro_recall": report.micro_recall,
    }


def reproduce(
    cfg: ExperimentConfig, out_dir: Path | str, *, progress: bool = False
) -> dict[str, Any]:
    """Run the complete workflow and write the summary and plot tables.

    Writes `summary.json`, one CSV per sweep and `durations.csv` into
    `out_dir`. Identical configurations give byte-identical files.
    """
    out_dir = Path(out_dir)
    runs = {
        position: simulate_population(cfg, position, progress=progress)
        for position in PehPosition
    }
    data = {
        (position, filtered): build_population_dataset(
            runs[position], cfg, filtered=filtered
        )
        for position in PehPosition
        for filtered in (False, True)
    }
    datasets = {key: value.dataset for key, value in data.items()}
    front = runs[PehPosition.FRONT]

    e_front = _mean_step_energy(front, cfg.circuit.c_farad)
    e_rear = _mean_step_energy(runs[PehPosition.REAR], cfg.circuit.c_farad)
    improvement = harvest_improvement(e_front, e_rear)
    similarity = similarity_report(
        datasets[PehPosition.FRONT, False], datasets[PehPosition.FRONT, True], cfg
    )
    distortion = [distortion_report(run, cfg.filter.v_star) for run in front]
    table = classifier_table(datasets, cfg, progress=progress)
    base = datasets[PehPosition.FRONT, True]
    sizes = [n for n in SIZE_GRID if n <= cfg.cycles_per_subject] or [
        cfg.cycles_per_subject
    ]
    sweeps = {
        SweepKind.V_STAR: sweep(SweepKind.V_STAR, V_STAR_GRID, cfg, front),
        SweepKind.SAMPLING_RATE: sweep(
            SweepKind.SAMPLING_RATE, RATE_GRID, cfg, front, base=base
        ),
        SweepKind.TRAINING_SIZE: sweep(
            SweepKind.TRAINING_SIZE, sizes, cfg, front, base=base
        ),
    }
    truth = np.concatenate([np.diff(run.sim.cycle_starts) for run in front])
    front_reports = data[PehPosition.FRONT, True].reports
    detected = [d for report in front_reports for d in report.durations_s]

    summary: dict[str, Any] = {
        "seed": cfg.seed,
        "n_subjects": cfg.n_subjects,
        "cycles_per_subject": cfg.cycles_per_subject,
        "power": _power_summary(),
        "energy": {
            "front_step_uj": e_front,
            "rear_step_uj": e_rear,
            "vs_front_pct": improvement.vs_front,
            "vs_rear_pct": improvement.vs_rear,
        },
        "pearson": pearson_report(front, cfg.filter.v_star),
        "distortion": [
            attrs.asdict(d) | {"reduction": d.reduction} for d in distortion
        ],
        "similarity": [
            {"subject_id": r.subject_id, "raw": r.raw, "filtered": r.filtered}
            for r in similarity
        ],
        "classification": [
            {
                "model": row.kind.value,
                "position": row.position.value,
                "filtered": row.filtered,
                **_report_row(row.report),
            }
            for row in table
        ],
        "segmentation": [
            {
                "position": position.value,
                "filtered": filtered,
                "subject_id": r.subject_id,
                "detected": r.detected,
                "rejected": r.rejected,
                "kept": r.kept,
            }
            for (position, filtered), value in data.items()
            for r in value.reports
        ],
        "sweeps": {
            kind.value: [
                {"point": row.point, **_report_row(row.report)} for row in rows
            ]
            for kind, rows in sweeps.items()
        },
    }
    atomic_write_text(
        out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    for kind, rows in sweeps.items():
        write_sweep_csv(kind, rows, out_dir / f"sweep_{kind.value}.csv")
    _write_histograms(
        duration_histogram(truth), duration_histogram(detected), out_dir
    )
    logger.info(f"Reproduction written to {out_dir}.")
    return summary


def _write_histograms(truth: Histogram, detected: Histogram, out_dir: Path) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("bin_low_s", "bin_high_s", "ground_truth", "detected"))
    for k, (a, b) in enumerate(zip(truth.counts, detected.counts, strict=True)):
        writer.writerow((repr(truth.edges[k]), repr(truth.edges[k + 1]), a, b))
    atomic_write_text(out_dir / "durations.csv", buffer.getvalue())
