import json
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rodeo_schedules.core import DiscreteSpectrum, Schedule
from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.qsim import PhysicalState
from rodeo_schedules.superiter import SuperSchedule
from rodeo_schedules.utils.io_converters import (
    read_json,
    read_spectrum,
    records_to_csv,
    schedule_from_json,
    schedule_to_json,
    spectrum_to_csv,
    spectrum_to_json,
    state_from_json,
    state_to_json,
    super_schedule_from_json,
    super_schedule_to_json,
    write_records,
)


def test_csv_keeps_full_precision():
    text = records_to_csv([{"x": 0.1, "y": 1.0 / 3.0}], ["x", "y"])
    header, row = text.splitlines()
    assert header == "x,y"
    assert [float(v) for v in row.split(",")] == [0.1, 1.0 / 3.0]
    assert "\r" not in text


def test_write_records_json(tmp_path):
    out = tmp_path / "rows.json"
    write_records([{"n": np.int64(2), "q": np.float64(0.5)}], ["n", "q"], out, fmt="json")
    assert json.loads(out.read_text()) == [{"n": 2, "q": 0.5}]
    with pytest.raises(UsageError):
        write_records([], ["n"], out, fmt="xml")


def test_read_spectrum_csv(tmp_path):
    path = tmp_path / "spectrum.csv"
    path.write_text("# ground_weight=0.25\nenergy_ratio,weight\n2.5,0.5\n4.0,0.25\n")
    spectrum = read_spectrum(path)
    assert spectrum.ground_weight == 0.25
    assert spectrum.excited == ((2.5, 0.5), (4.0, 0.25))


def test_read_spectrum_csv_without_ground_comment(tmp_path):
    path = tmp_path / "spectrum.csv"
    path.write_text("energy_ratio,weight\n3.0,0.5\n")
    assert read_spectrum(path).ground_weight == 0.5


def test_read_spectrum_csv_with_ground_row(tmp_path):
    path = tmp_path / "spectrum.csv"
    path.write_text("x,weight\n0,0.25\n2.5,0.5\n4.0,0.25\n")
    spectrum = read_spectrum(path)
    assert spectrum.ground_weight == 0.25
    assert spectrum.excited == ((2.5, 0.5), (4.0, 0.25))


def test_read_spectrum_json(tmp_path):
    path = tmp_path / "spectrum.json"
    path.write_text(json.dumps({"ground_weight": 0.5, "excited": [{"x": 1.5, "w": 0.3}, {"x": 2.0, "w": 0.2}]}))
    assert read_spectrum(path).excited == ((1.5, 0.3), (2.0, 0.2))
    path.write_text(json.dumps({"ground_weight": 0.5, "excited": [[1.5, 0.5]]}))
    assert read_spectrum(path).excited == ((1.5, 0.5),)
    path.write_text(json.dumps({"ground_weight": 0.5, "excited": [{"energy": 1.5}]}))
    with pytest.raises(UsageError):
        read_spectrum(path)


def test_spectrum_files_read_back(tmp_path):
    spectrum = DiscreteSpectrum(0.2, ((1.25, 0.3), (7.5, 0.5)))
    csv_path = tmp_path / "spectrum.csv"
    csv_path.write_text(spectrum_to_csv(spectrum))
    assert csv_path.read_text().splitlines()[:2] == ["# ground_weight=0.20000000000000001", "energy_ratio,weight"]
    assert read_spectrum(csv_path) == spectrum
    json_path = tmp_path / "spectrum.json"
    json_path.write_text(json.dumps(spectrum_to_json(spectrum)))
    assert read_spectrum(json_path) == spectrum


def test_read_spectrum_errors(tmp_path):
    with pytest.raises(UsageError):
        read_spectrum(tmp_path / "missing.csv")
    path = tmp_path / "bad.csv"
    path.write_text("energy,weight\n0,1\n")
    with pytest.raises(UsageError):
        read_spectrum(path)
    path.write_text("x,weight\n0,0.5\n0.5,0.5\n")
    with pytest.raises(DomainError):
        read_spectrum(path)


def test_schedule_codecs():
    schedule = Schedule((0.9494, 0.6638))
    assert schedule_from_json(schedule_to_json(schedule)) == schedule
    with pytest.raises(UsageError):
        schedule_from_json({"durations": [1.0]})

    super_schedule = SuperSchedule.from_bases((1.0, 0.7), depth=12)
    data = super_schedule_to_json(super_schedule)
    assert data["supers"] == [{"base_time": 1.0, "depth": 12}, {"base_time": 0.7, "depth": 12}]
    assert data["total"] == pytest.approx(1.7 * (1 - 2.0 ** -12), rel=1e-15)
    assert super_schedule_from_json(data) == super_schedule
    assert super_schedule_from_json({"supers": [{"base_time": 0.5}]}).supers[0].base_time == 0.5
    assert super_schedule_from_json({"bases": [1.0, 0.7], "depths": [12, 12]}) == super_schedule
    with pytest.raises(UsageError):
        super_schedule_from_json({"supers": []})
    with pytest.raises(UsageError):
        super_schedule_from_json({"supers": [{"time": 1.0}]})


def test_state_codec_renormalizes():
    state = state_from_json({"energies": [0.0, 2.0], "amplitudes": [[3.0, 0.0], [0.0, 4.0]]})
    assert np.allclose(state.amplitudes, [0.6, 0.8j])
    assert isinstance(state, PhysicalState)
    assert state_to_json(state)["amplitudes"] == [[0.6, 0.0], [0.0, 0.8]]
    with pytest.raises(UsageError):
        state_from_json({"energies": [0.0]})


def test_read_json_errors(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    with pytest.raises(UsageError):
        read_json(path)
    with pytest.raises(UsageError):
        read_json(tmp_path / "missing.json")
