import json
import os
import sys

import pytest
from pydantic import ValidationError

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rodeo_schedules.config.config_loader import ConfigLoader, ConfigurationError, RunConfig


def test_load_numerics_config():
    numerics = ConfigLoader().load_numerics_config()
    assert numerics.points_per_unit == 20000
    assert numerics.super_depth == 32
    assert numerics.envelope_x_max == 64.0


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        ConfigLoader(config_path=tmp_path / "missing.yml").load_numerics_config()


def test_malformed_yaml(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("numerics: [unclosed\n")
    with pytest.raises(ConfigurationError):
        ConfigLoader(config_path=path).load_numerics_config()


def test_missing_fields(tmp_path):
    path = tmp_path / "config.yml"
    path.write_text("numerics:\n  points_per_unit: 100\n")
    with pytest.raises(ConfigurationError) as e:
        ConfigLoader(config_path=path).load_numerics_config()
    assert "super_depth" in str(e.value)


def test_log_level_override(monkeypatch):
    monkeypatch.setenv("RODEO_LOG_LEVEL", "debug")
    assert ConfigLoader().load_output_config().log_level == "DEBUG"


def test_seed_override(monkeypatch):
    monkeypatch.setenv("RODEO_SEED", "17")
    assert ConfigLoader().default_seed() == 17
    monkeypatch.setenv("RODEO_SEED", "seventeen")
    with pytest.raises(ConfigurationError):
        ConfigLoader().default_seed()


def test_run_file_keys_are_normalized(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"points-per-unit": 500, "cycles": 2}))
    assert ConfigLoader().load_run_file(path) == {"points_per_unit": 500, "cycles": 2}


def test_run_config_ranges():
    assert RunConfig(command="wam").format == "csv"
    with pytest.raises(ValidationError):
        RunConfig(command="wam", cycles=0)
    with pytest.raises(ValidationError):
        RunConfig(command="wam", cycles=13)
    with pytest.raises(ValidationError):
        RunConfig(command="wam", format="xml")
    with pytest.raises(ValidationError):
        RunConfig(command="rra", trials=-1)
    with pytest.raises(ValidationError):
        RunConfig(command="rra", unknown=True)


def test_numerics_reach_run_config():
    config = RunConfig(command="rra", block_size=1024, golden_tolerance=0.01, float_format="%.6g")
    assert (config.block_size, config.golden_tolerance, config.float_format) == (1024, 0.01, "%.6g")
    with pytest.raises(ValidationError):
        RunConfig(command="rra", block_size=0)
    with pytest.raises(ValidationError):
        RunConfig(command="verify", golden_tolerance=0.0)
