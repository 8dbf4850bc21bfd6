"""Tests for run configuration files."""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from sehs.config import SEED_ENV, check_inputs, load_config, parse_config
from sehs.exceptions import SehsConfigError
from sehs.synth import Span

if TYPE_CHECKING:
    from pathlib import Path

DOCUMENT = """
seed = 11
n_subjects = 4
circuit.r_match_ohm = 2200.0
filter.v_star = 1.5
pipeline.target_len = 100
train.batch_size = 32
population.heel_peak_v = [215.0, 235.0]
"""


class TestParseConfig:
    """Tests for parse_config()."""

    def test_empty(self) -> None:
        """An empty document keeps every default."""
        cfg = parse_config("", env={})
        assert cfg.seed == 7
        assert cfg.experiment.n_subjects == 20
        assert cfg.source is None

    def test_dotted_keys(self) -> None:
        """Dotted keys reach into the module configurations."""
        experiment = parse_config(DOCUMENT, env={}).experiment
        assert experiment.seed == 11
        assert experiment.n_subjects == 4
        assert experiment.circuit.r_match_ohm == 2200.0
        assert experiment.circuit.r_internal_ohm == 1e6
        assert experiment.filter.v_star == 1.5
        assert experiment.pipeline.target_len == 100
        assert experiment.train.batch_size == 32
        assert experiment.population.heel_peak_v == Span(215.0, 235.0)

    def test_seed_from_environment(self) -> None:
        """The environment overrides the file's seed."""
        assert parse_config(DOCUMENT, env={SEED_ENV: "3"}).seed == 3

    def test_bad_seed_environment(self) -> None:
        """A non-integer seed override is rejected."""
        with pytest.raises(SehsConfigError, match="must be an integer"):
            parse_config("", env={SEED_ENV: "seven"})

    @pytest.mark.parametrize(
        ("text", "match"),
        [
            ("colour = 3", "Unknown configuration key 'colour'"),
            ("circuit.colour = 3", "Unknown configuration key 'circuit.colour'"),
            ("circuit = 3", "must be a table"),
            ("seed = ", "Malformed configuration"),
            ("filter.v_star = -1.0", "v_star"),
            ("pipeline.target_len = 1", "target_len"),
            ("population.heel_peak_v = [235.0, 215.0]", "empty"),
            ("train.split = 'most'", "Invalid configuration value"),
        ],
    )
    def test_invalid(self, text: str, match: str) -> None:
        """Malformed, unknown and out-of-range entries are configuration errors."""
        with pytest.raises(SehsConfigError, match=match):
            parse_config(text, env={})


class TestLoadConfig:
    """Tests for load_config() and check_inputs()."""

    def test_defaults_without_path(self) -> None:
        """No path means the default configuration."""
        assert load_config(env={}).experiment.cycles_per_subject == 250

    def test_file(self, tmp_path: Path) -> None:
        """A file is read and remembered as the source."""
        path = tmp_path / "run.toml"
        path.write_text(DOCUMENT, encoding="utf-8")
        cfg = load_config(path, env={})
        assert cfg.seed == 11
        assert cfg.source == path

    def test_missing_file(self, tmp_path: Path) -> None:
        """A missing file fails before anything runs."""
        with pytest.raises(SehsConfigError, match="not found"):
            load_config(tmp_path / "absent.toml", env={})

    def test_check_inputs(self, tmp_path: Path) -> None:
        """Every missing file is named; None is skipped."""
        present = tmp_path / "here.csv"
        present.write_text("", encoding="utf-8")
        check_inputs(present, None)
        with pytest.raises(SehsConfigError, match=r"a\.csv, .*b\.csv"):
            check_inputs(tmp_path / "a.csv", present, tmp_path / "b.csv")
