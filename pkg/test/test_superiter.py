import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rodeo_schedules.core import schedule_suppression
from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.superiter import (
    SuperIteration,
    SuperSchedule,
    expand,
    first_side_peak,
    iteration_count,
    max_valid_energy,
    rra_advantage,
    super_profile,
    super_suppression,
    truncated_super_product,
    truncated_super_suppression,
)


def test_super_suppression_values():
    assert super_suppression(0.0) == 1.0
    assert super_suppression(1.0) == 0.0
    assert super_suppression(3.0) == 0.0
    assert super_suppression(0.5) == pytest.approx(4.0 / math.pi ** 2, rel=1e-14)


def test_first_side_peak():
    z = first_side_peak()
    assert z == pytest.approx(1.4302966531, abs=1e-9)
    assert super_suppression(z) == pytest.approx(4.719e-2, abs=1e-4)


def test_truncated_matches_product_at_random_points():
    rng = np.random.default_rng(11)
    zeta = rng.uniform(0.0, 1e3, 1000)
    depth = rng.integers(1, 41, 1000)
    for z, d in zip(zeta, depth):
        assert truncated_super_suppression(z, int(d)) == pytest.approx(truncated_super_product(z, int(d)), abs=1e-10)


def test_truncated_depth_one_is_half_time_iteration():
    z = np.linspace(0, 5, 51)
    assert np.allclose(truncated_super_suppression(z, 1), np.cos(0.5 * np.pi * z) ** 2, atol=1e-15)


def test_truncated_approaches_infinite_depth():
    z = np.linspace(0.0, 20.0, 201)
    assert np.allclose(truncated_super_suppression(z, 40), super_suppression(z), atol=1e-12)


def test_max_valid_energy():
    assert 40308.0 <= max_valid_energy(15) <= 40309.0
    with pytest.raises(DomainError):
        max_valid_energy(0)


def test_super_iteration_rungs():
    sup = SuperIteration(1.0, 3)
    assert sup.rung_times == (0.5, 0.25, 0.125)
    assert sup.expanded_total == 0.875
    with pytest.raises(DomainError):
        SuperIteration(0.0)
    with pytest.raises(DomainError):
        SuperIteration(1.0, 0)


def test_super_schedule_totals_and_expand():
    schedule = SuperSchedule.from_bases((1.0, 0.5), depth=4)
    assert schedule.nominal_total == 1.5
    assert schedule.total == pytest.approx(1.5 * (1 - 2 ** -4))
    flat = expand(schedule)
    assert len(flat) == iteration_count(schedule) == 8
    assert flat.total == pytest.approx(schedule.total)
    with pytest.raises(UsageError):
        SuperSchedule(())


def test_expanded_schedule_matches_truncated_closed_form():
    schedule = SuperSchedule.from_bases((0.9361, 0.6545), depth=10)
    x = np.linspace(1.0, 30.0, 300)
    expected = truncated_super_suppression(0.9361 * x, 10) * truncated_super_suppression(0.6545 * x, 10)
    assert np.allclose(schedule_suppression(expand(schedule), x), expected, atol=1e-12)


def test_super_profile_carries_tail_bound():
    profile = super_profile((1.0, 0.7))
    assert profile.decay_times == (1.0, 0.7)
    x = np.linspace(1.0, 50.0, 5000)
    tails = np.array([profile.tail_bound(v) for v in x])
    assert np.all(profile(x) <= tails * (1 + 1e-12))
    assert all(profile(z) < 1e-28 for z in profile.zero_set)
    assert super_profile((1.0,), depth=20).decay_times is None


def test_single_super_beats_random_schedule():
    x = np.arange(1.0, 20.0 + 1e-9, 0.01)
    ratio = rra_advantage(x, base_time=1.0, n=3)
    assert np.all(ratio >= 2.5)
