import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rodeo_schedules.config.config_loader import ConfigLoader
from rodeo_schedules.core import DiscreteSpectrum, SuppressionProfile, overall_excited_suppression
from rodeo_schedules.exceptions import DomainError
from rodeo_schedules.superiter import super_profile
from rodeo_schedules.wam import (
    find_worst_peak,
    initial_state,
    rescale_to_equalize,
    rra_comparison,
    wam_optimize,
    wam_table,
    whack,
    worst_case_bound,
)


@pytest.fixture(scope="module")
def optimized():
    return wam_optimize(8)


@pytest.fixture(scope="module")
def golden():
    with open(ConfigLoader().golden_path, 'r') as f:
        return json.load(f)


def test_single_super_peak():
    x, value = find_worst_peak(super_profile((1.0,)), 1.0, 50.0)
    assert x == pytest.approx(1.43029, abs=1e-4)
    assert value == pytest.approx(0.047190, abs=1e-5)


def test_zero_profile_peak():
    x, value = find_worst_peak(SuppressionProfile.constant(0.0), 1.0, 5.0, points_per_unit=100)
    assert value == 0.0
    assert x == 1.0


def test_first_rescale():
    scale, state = rescale_to_equalize(initial_state())
    assert scale == pytest.approx(0.8129, abs=2e-3)
    assert state.times[0] == pytest.approx(0.8129, abs=2e-3)
    assert worst_case_bound(state) == pytest.approx(4.719e-2, rel=0.01)


def test_whack_places_zero():
    state = whack(initial_state(), location=2.0)
    assert state.bases[-1] == 0.5
    assert super_profile(state.bases)(2.0) == 0.0


def test_whack_lowers_worst_peak():
    before = initial_state()
    after = whack(before)
    assert after.bases[-1] == pytest.approx(1.0 / 1.4302966531, rel=1e-6)
    assert after.peak[1] < before.peak[1]


def test_table_reproduction(optimized, golden):
    rows = wam_table(optimized)
    assert len(rows) == 8
    for row, expected in zip(rows, golden['rows']):
        assert row.n == expected['n']
        assert row.q == pytest.approx(expected['Q'], rel=0.05)
        assert row.total_time == pytest.approx(expected['total_time'], abs=5e-3)
        assert np.allclose(row.times, expected['times'], atol=2e-3)


def test_monotone_improvement(optimized):
    rows = wam_table(optimized)
    assert all(b.q < a.q for a, b in zip(rows, rows[1:]))
    assert all(b.total_time > a.total_time for a, b in zip(rows, rows[1:]))


def test_worst_case_bound_dominates_random_spectra(optimized):
    row = wam_table(optimized)[2]
    profile = super_profile(row.times)
    q = row.q
    rng = np.random.default_rng(42)

    x = rng.uniform(1.0, 100.0, 100_000)
    assert np.all(profile(x) <= q * (1 + 1e-9))

    for _ in range(1000):
        energies = rng.uniform(1.0, 100.0, 5)
        weights = rng.dirichlet(np.ones(6))
        spectrum = DiscreteSpectrum(weights[0], tuple(zip(energies, weights[1:])))
        assert overall_excited_suppression(spectrum, profile) <= q + 1e-12


def test_beats_random_schedules_at_equal_time(optimized):
    rows = wam_table(optimized)
    ratios = [rra_comparison(row) for row in rows]
    assert all(r > 1.0 for r in ratios)
    assert ratios[-1] > 1e7


def test_invalid_cycles():
    with pytest.raises(DomainError):
        wam_optimize(0)
