"""Command-line interface.

Every subcommand writes its outputs atomically. Exit codes: 0 on success, 1
for configuration errors (including usage errors), 2 for data errors and 3
for anything else. Failures also print one JSON object on stderr:

```json
{"error": "SehsInputError", "message": "...", "exit_code": 2}
```
"""

from __future__ import annotations

__all__: tuple[str, ...] = ("EXIT_CONFIG", "EXIT_DATA", "EXIT_INTERNAL", "run")

import argparse
import json
import sys
import tomllib
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final, NoReturn

import attrs
import numpy as np
from loguru import logger

from sehs import __version__
from sehs.config import RunConfig, check_inputs, load_config
from sehs.energy import (
    PROFILES,
    PowerProfile,
    energy_per_event,
    harvest_improvement,
    overall_power,
    trace_step_energy,
)
from sehs.exceptions import SehsConfigError, SehsDataError, SehsInputError
from sehs.experiments import (
    SweepKind,
    reproduce,
    simulate_population,
    sweep,
    write_sweep_csv,
)
from sehs.filtering import FilterConfig, filter_trace
from sehs.metrics import evaluate
from sehs.models import Channel, PehPosition
from sehs.pipeline import build_dataset, extract_cycles
from sehs.storage import load_model, save_model
from sehs.traces import load_dataset, load_trace, save_dataset, save_trace
from sehs.training import ModelKind, train_classifier
from sehs.utils import atomic_write_text

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable, Sequence

    from sehs.energy import StepEnergies

EXIT_OK: Final = 0
EXIT_CONFIG: Final = 1
EXIT_DATA: Final = 2
EXIT_INTERNAL: Final = 3

SWEEP_KINDS: Final[dict[str, SweepKind]] = {
    "v_star": SweepKind.V_STAR,
    "rate": SweepKind.SAMPLING_RATE,
    "size": SweepKind.TRAINING_SIZE,
}
POSITIONS: Final[dict[str, tuple[PehPosition, ...]]] = {
    "front": (PehPosition.FRONT,),
    "rear": (PehPosition.REAR,),
    "both": (PehPosition.FRONT, PehPosition.REAR),
}


class UsageError(SehsConfigError):
    """Invalid command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _write_json(payload: Any, path: Path | str | None) -> None:  # noqa: ANN401
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def _run_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = attrs.evolve(
            cfg, experiment=attrs.evolve(cfg.experiment, seed=args.seed)
        )
    return cfg


def _cmd_synth(args: argparse.Namespace) -> None:
    cfg = _run_config(args).experiment
    out_dir = Path(args.out_dir)
    for position in POSITIONS[args.position]:
        for run in simulate_population(cfg, position, progress=args.progress):
            name = f"{position.value.lower()}_{run.subject_id:02d}.csv"
            save_trace(run.sim.trace, out_dir / name)
    logger.info(f"Traces written to {out_dir}.")


def _cmd_filter(args: argparse.Namespace) -> None:
    check_inputs(args.input)
    trace = load_trace(args.input)
    filtered = filter_trace(trace, FilterConfig(v_star=args.v_star))
    save_trace(trace.merged(filtered), args.output)


def _cmd_pipeline(args: argparse.Namespace) -> None:
    check_inputs(args.config, *args.input)
    cfg = _run_config(args).experiment
    position = PehPosition(args.position)
    extractions = []
    for subject_id, path in enumerate(args.input):
        trace = load_trace(path)
        samples = (
            trace.channel(Channel.V_F.value)
            if Channel.V_F.value in trace.channels
            else trace.differential()
        )
        extractions.append(
            extract_cycles(
                samples,
                trace.sample_rate_hz,
                subject_id,
                cfg.pipeline,
                source_peh=position,
            )
        )
    per_subject = args.per_subject or cfg.cycles_per_subject
    dataset = build_dataset(extractions, per_subject, len(args.input))
    save_dataset(dataset, args.output)
    if args.report:
        _write_json(
            [attrs.asdict(extraction.report) for extraction in extractions],
            args.report,
        )


def _cmd_train(args: argparse.Namespace) -> None:
    check_inputs(args.config, args.dataset)
    cfg = _run_config(args).experiment
    dataset = load_dataset(args.dataset)
    model, report = train_classifier(
        ModelKind(args.model),
        dataset,
        cfg.train,
        sample_rate_hz=cfg.sample_rate_hz,
        hidden_units=cfg.hidden_units,
        k=cfg.knn_k,
        progress=args.progress,
    )
    save_model(model, args.out)
    _write_json(report.to_payload(), args.report)


def _cmd_eval(args: argparse.Namespace) -> None:
    check_inputs(args.model, args.dataset)
    model = load_model(args.model)
    dataset = load_dataset(args.dataset)
    predicted = model.predict(dataset.matrix())
    n_classes = max(dataset.n_subjects, int(predicted.max()) + 1)
    report = evaluate(dataset.labels(), predicted, n_classes)
    _write_json(report.to_payload(), args.report)


def _cmd_sweep(args: argparse.Namespace) -> None:
    check_inputs(args.config)
    cfg = _run_config(args).experiment
    kind = SWEEP_KINDS[args.kind]
    runs = simulate_population(cfg, PehPosition.FRONT, progress=args.progress)
    rows = sweep(
        kind,
        args.grid,
        cfg,
        runs,
        model=ModelKind(args.model),
        progress=args.progress,
    )
    write_sweep_csv(kind, rows, args.out)


def _profile(name: str) -> PowerProfile:
    if name in PROFILES:
        return PROFILES[name]
    check_inputs(name)
    try:
        return PowerProfile(**tomllib.loads(Path(name).read_text(encoding="utf-8")))
    except (tomllib.TOMLDecodeError, TypeError) as e:
        msg = f"Invalid power profile {name}: {e}"
        raise SehsConfigError(msg) from e


def _cmd_power(args: argparse.Namespace) -> None:
    profile = _profile(args.profile)
    if args.rate is not None:
        profile = attrs.evolve(profile, sampling_rate_hz=args.rate)
    _write_json(
        {
            "profile": profile.to_payload(),
            "duty_cycle": profile.duty_cycle,
            "overall_power_uw": round(overall_power(profile), 2),
            "energy_per_event_uj": round(energy_per_event(profile), 2),
        },
        args.out,
    )


def _step_stats(steps: StepEnergies) -> dict[str, Any]:
    if not steps.energies_uj:
        msg = "No complete steps to measure"
        raise SehsInputError(msg)
    values = np.asarray(steps.energies_uj)
    return {
        "steps": int(values.size),
        "skipped": len(steps.skipped),
        "mean_uj": float(values.mean()),
        "std_uj": float(values.std()),
        "min_uj": float(values.min()),
        "max_uj": float(values.max()),
    }


def _cmd_energy(args: argparse.Namespace) -> None:
    check_inputs(args.trace, args.rear_trace)
    front = _step_stats(trace_step_energy(load_trace(args.trace), args.c))
    report: dict[str, Any] = {"front": front}
    if args.rear_trace:
        rear = _step_stats(trace_step_energy(load_trace(args.rear_trace), args.c))
        improvement = harvest_improvement(front["mean_uj"], rear["mean_uj"])
        report |= {
            "rear": rear,
            "improvement_vs_front_pct": improvement.vs_front,
            "improvement_vs_rear_pct": improvement.vs_rear,
        }
    _write_json(report, args.out)


def _cmd_reproduce(args: argparse.Namespace) -> None:
    check_inputs(args.config)
    cfg = _run_config(args).experiment
    reproduce(cfg, args.out_dir, progress=args.progress)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="debug logs")
    common.add_argument(
        "-q", "--quiet", action="store_true", help="warnings only, no progress bars"
    )
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--config", type=Path, help="flat TOML run configuration")
    seeded.add_argument("--seed", type=int, help="override the configured seed")

    parser = _Parser(
        prog="sehs", description="Simultaneous energy harvesting and sensing."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(
        name: str,
        handler: Callable[[argparse.Namespace], None],
        help_text: str,
        parents: Sequence[argparse.ArgumentParser] = (),
    ) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text, parents=[common, *parents])
        cmd.set_defaults(handler=handler)
        return cmd

    cmd = add("synth", _cmd_synth, "simulate the population to trace CSVs", [seeded])
    cmd.add_argument("--out-dir", type=Path, required=True)
    cmd.add_argument("--position", choices=tuple(POSITIONS), default="both")

    cmd = add("filter", _cmd_filter, "remove the capacitor-voltage distortion")
    cmd.add_argument("--input", type=Path, required=True)
    cmd.add_argument("--v-star", type=float, default=FilterConfig().v_star)
    cmd.add_argument("--output", type=Path, required=True)

    cmd = add("pipeline", _cmd_pipeline, "extract a gait dataset", [seeded])
    cmd.add_argument(
        "--input", type=Path, nargs="+", required=True, help="one trace per subject"
    )
    cmd.add_argument(
        "--position", choices=[p.value for p in PehPosition], default="Front"
    )
    cmd.add_argument("--per-subject", type=int, help="cycles kept per subject")
    cmd.add_argument("--output", type=Path, required=True)
    cmd.add_argument("--report", type=Path)

    cmd = add("train", _cmd_train, "train and test a classifier", [seeded])
    cmd.add_argument("--dataset", type=Path, required=True)
    cmd.add_argument("--model", choices=[k.value for k in ModelKind], required=True)
    cmd.add_argument("--out", type=Path, required=True)
    cmd.add_argument("--report", type=Path)

    cmd = add("eval", _cmd_eval, "evaluate a stored model on a dataset")
    cmd.add_argument("--model", type=Path, required=True)
    cmd.add_argument("--dataset", type=Path, required=True)
    cmd.add_argument("--report", type=Path)

    cmd = add("sweep", _cmd_sweep, "sweep one parameter", [seeded])
    cmd.add_argument("--kind", choices=tuple(SWEEP_KINDS), required=True)
    cmd.add_argument("--grid", type=float, nargs="+", required=True)
    cmd.add_argument(
        "--model", choices=[k.value for k in ModelKind], default="bilstm"
    )
    cmd.add_argument("--out", type=Path, required=True)

    cmd = add("power", _cmd_power, "sensing power analysis")
    cmd.add_argument(
        "--profile", default="sehs", help=f"{' | '.join(PROFILES)} | profile.toml"
    )
    cmd.add_argument("--rate", type=float, help="sampling rate in Hz")
    cmd.add_argument("--out", type=Path)

    cmd = add("energy", _cmd_energy, "per-step harvested energy of a trace")
    cmd.add_argument("--trace", type=Path, required=True)
    cmd.add_argument("--rear-trace", type=Path)
    cmd.add_argument("--c", type=float, default=1000e-6, help="capacitance in F")
    cmd.add_argument("--out", type=Path)

    cmd = add("reproduce", _cmd_reproduce, "run the complete workflow", [seeded])
    cmd.add_argument("--out-dir", type=Path, required=True)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else "INFO"
    logger.remove()
    logger.add(sys.stderr, level=level)
    args.progress = not args.quiet


def _fail(error: BaseException, exit_code: int) -> int:
    sys.stderr.write(f"sehs: error: {error}\n")
    sys.stderr.write(
        json.dumps(
            {
                "error": type(error).__name__,
                "message": str(error),
                "exit_code": exit_code,
            }
        )
        + "\n"
    )
    return exit_code


def run(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return the exit code."""
    try:
        args = _parser().parse_args(argv)
    except UsageError as e:
        return _fail(e, EXIT_CONFIG)
    _configure_logging(args)
    try:
        args.handler(args)
    except SehsConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except SehsDataError as e:
        return _fail(e, EXIT_DATA)
    except Exception as e:  # noqa: BLE001
        logger.opt(exception=e).debug("Internal error.")
        return _fail(e, EXIT_INTERNAL)
    return EXIT_OK


def main() -> NoReturn:
    """Console-script entry point."""
    sys.exit(run())
