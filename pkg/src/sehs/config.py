"""Run configuration files.

A configuration file is flat TOML. Top-level keys set run-wide values; dotted
keys set a field of one module configuration:

```toml
seed = 7
n_subjects = 20
circuit.r_match_ohm = 2000.0
filter.v_star = 2.0
pipeline.target_len = 130
train.batch_size = 64
population.heel_peak_v = [280.0, 305.0]
```

Missing keys keep their defaults. The `SEHS_SEED` environment variable
overrides `seed`.
"""

from __future__ import annotations

__all__: tuple[str, ...] = (
    "SECTIONS",
    "SEED_ENV",
    "RunConfig",
    "check_inputs",
    "load_config",
    "parse_config",
)

import os
import tomllib
from pathlib import Path
from typing import TYPE_CHECKING, Any, Final

import attrs
from loguru import logger

from sehs.exceptions import SehsConfigError, SehsError
from sehs.experiments import ExperimentConfig

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Mapping

SEED_ENV: Final = "SEHS_SEED"
SECTIONS: Final = ("circuit", "population", "filter", "pipeline", "train")


@attrs.frozen
class RunConfig:
    """A loaded run configuration.

    Attributes:
        experiment: Every module configuration and the run-wide values.
        source: File the configuration was read from, if any.
    """

    experiment: ExperimentConfig = attrs.Factory(ExperimentConfig)
    source: Path | None = None

    @property
    def seed(self) -> int:
        """Global seed."""
        return self.experiment.seed


def _section(name: str, default: Any, values: Any) -> Any:  # noqa: ANN401
    if not isinstance(values, dict):
        msg = f"'{name}' must be a table of {name}.<field> keys"
        raise SehsConfigError(msg)
    known = attrs.fields_dict(type(default))
    for key in values:
        if key not in known:
            msg = f"Unknown configuration key '{name}.{key}'"
            raise SehsConfigError(msg)
    return attrs.evolve(default, **values)


def _build(document: Mapping[str, Any]) -> ExperimentConfig:
    base = ExperimentConfig()
    scalars = {
        name for name in attrs.fields_dict(ExperimentConfig) if name not in SECTIONS
    }
    changes: dict[str, Any] = {}
    for key, value in document.items():
        if key in SECTIONS:
            changes[key] = _section(key, getattr(base, key), value)
        elif key in scalars:
            changes[key] = value
        else:
            msg = f"Unknown configuration key '{key}'"
            raise SehsConfigError(msg)
    return attrs.evolve(base, **changes)


def _seed_override(env: Mapping[str, str]) -> int | None:
    raw = env.get(SEED_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as e:
        msg = f"{SEED_ENV} must be an integer, got {raw!r}"
        raise SehsConfigError(msg) from e


def parse_config(
    text: str, *, env: Mapping[str, str] | None = None, source: Path | None = None
) -> RunConfig:
    """Parse configuration text.

    Raises:
        SehsConfigError: If the text is not valid TOML, names an unknown key, or
            holds a value the configuration rejects.
    """
    env = os.environ if env is None else env
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        msg = f"Malformed configuration{f' {source}' if source else ''}: {e}"
        raise SehsConfigError(msg) from e
    try:
        experiment = _build(document)
    except SehsError:
        raise
    except (TypeError, ValueError) as e:
        msg = f"Invalid configuration value: {e}"
        raise SehsConfigError(msg) from e
    seed = _seed_override(env)
    if seed is not None:
        logger.debug(f"Seed {seed} taken from {SEED_ENV}.")
        experiment = attrs.evolve(experiment, seed=seed)
    return RunConfig(experiment=experiment, source=source)


def load_config(
    path: Path | str | None = None, *, env: Mapping[str, str] | None = None
) -> RunConfig:
    """Read a configuration file; without a path, the defaults apply.

    Raises:
        SehsConfigError: If the file is missing or invalid.
    """
    if path is None:
        return parse_config("", env=env)
    path = Path(path)
    check_inputs(path)
    return parse_config(path.read_text(encoding="utf-8"), env=env, source=path)


def check_inputs(*paths: Path | str | None) -> None:
    """Fail fast when an input file does not exist.

    Raises:
        SehsConfigError: Naming every missing file.
    """
    missing = [str(p) for p in paths if p is not None and not Path(p).is_file()]
    if missing:
        msg = f"Input file(s) not found: {', '.join(missing)}"
        raise SehsConfigError(msg)
