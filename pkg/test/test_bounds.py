import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rodeo_schedules.bounds import (
    MonotoneEnvelope,
    PartialSpectralInfo,
    bound_report,
    exact_SE_from_table,
    monotone_envelope,
    partial_info_bound,
)
from rodeo_schedules.core import DiscreteSpectrum, SuppressionProfile, overall_excited_suppression
from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.superiter import super_profile
from rodeo_schedules.wam import wam_optimize, wam_table


@pytest.fixture(scope="module")
def table():
    return wam_table(wam_optimize(3))


@pytest.fixture(scope="module")
def envelope(table):
    return monotone_envelope(super_profile(table[2].times), 1.0, 64.0)


def test_constant_profile_envelope():
    env = monotone_envelope(SuppressionProfile.constant(0.3), 1.0, 5.0, points_per_unit=100)
    assert np.allclose(env(np.linspace(1.0, 5.0, 17)), 0.3)


def test_decreasing_profile_envelope_is_the_profile():
    profile = SuppressionProfile(lambda x: 1.0 / np.square(x))
    env = monotone_envelope(profile, 1.0, 10.0, points_per_unit=1000)
    assert np.allclose(env.values, 1.0 / env.x ** 2, rtol=1e-14)
    x = np.random.default_rng(1).uniform(1.0, 10.0, 1000)
    assert np.all(env(x) >= profile(x))
    with pytest.raises(DomainError):
        env(11.0)


def test_envelope_rejects_increasing_breakpoints():
    with pytest.raises(DomainError):
        MonotoneEnvelope(x=np.array([1.0, 2.0]), values=np.array([0.1, 0.2]))
    with pytest.raises(UsageError):
        MonotoneEnvelope(x=np.array([]), values=np.array([]))


def test_envelope_left_edge_is_worst_case(envelope):
    assert envelope(1.0) == pytest.approx(2.421e-5, rel=0.05)


def test_envelope_dominates_and_is_monotone(table, envelope):
    profile = super_profile(table[2].times)
    x = np.random.default_rng(5).uniform(1.0, 64.0, 100_000)
    assert np.all(envelope(x) >= profile(x) * (1 - 1e-6))
    assert np.all(np.diff(envelope.values) <= 0)
    # beyond the sampled window only the tail bound applies
    assert envelope(200.0) <= envelope(64.0)


def test_envelope_is_least_on_its_samples(table, envelope):
    profile = super_profile(table[2].times)
    # each breakpoint value is attained by the profile at or to the right of it
    attained = np.maximum.accumulate(profile(envelope.x)[::-1])[::-1]
    tail = profile.tail_bound(64.0)
    assert np.allclose(envelope.values, np.maximum(attained, tail), rtol=1e-12, atol=0.0)


def test_partial_information_bounds(envelope):
    assert partial_info_bound(envelope, PartialSpectralInfo(0.99, 3.0)) == pytest.approx(5.591e-7, rel=0.02)
    assert partial_info_bound(envelope, PartialSpectralInfo(0.9999, 8.0)) == pytest.approx(1.194e-8, rel=0.02)
    assert partial_info_bound(envelope, PartialSpectralInfo(0.0, 5.0)) == envelope(1.0)


def test_partial_info_validation():
    with pytest.raises(DomainError):
        PartialSpectralInfo(1.5, 2.0)
    with pytest.raises(DomainError):
        PartialSpectralInfo(0.5, 0.5)


def test_bound_chain_on_consistent_spectra(table, envelope):
    profile = super_profile(table[2].times)
    info = PartialSpectralInfo(0.9, 3.0)
    bound = partial_info_bound(envelope, info)
    q = envelope(1.0)
    rng = np.random.default_rng(13)
    for _ in range(1000):
        low = rng.uniform(1.0, 3.0, 3)
        high = rng.uniform(3.0, 64.0, 3)
        w_low = rng.dirichlet(np.ones(3)) * (1 - info.f)
        w_high = rng.dirichlet(np.ones(3)) * info.f
        ground = rng.uniform(0.01, 0.99)
        excited = tuple(zip(np.concatenate((low, high)), (1 - ground) * np.concatenate((w_low, w_high))))
        spectrum = DiscreteSpectrum(ground, excited)
        s_e = overall_excited_suppression(spectrum, profile)
        assert s_e <= bound * (1 + 1e-6)
    assert bound <= q


def test_table_scan_finds_short_schedule(table):
    spectrum = DiscreteSpectrum(0.5, ((3.0, 0.5),))
    result = exact_SE_from_table(spectrum, table, 1e-6)
    assert result.found
    assert result.row.n <= 3
    assert result.s_e <= 1e-6


def test_table_scan_first_row_at_zero(table):
    x_zero = 2.0 / table[0].times[0]
    result = exact_SE_from_table(DiscreteSpectrum(0.5, ((x_zero, 0.5),)), table, 1e-12)
    assert result.found and result.index == 0


def test_table_scan_not_found(table):
    result = exact_SE_from_table(DiscreteSpectrum(0.5, ((1.0, 0.5),)), table, 0.0)
    assert not result.found
    assert result.s_e == pytest.approx(min(row.q for row in table), rel=1e-6)
    with pytest.raises(UsageError):
        exact_SE_from_table(DiscreteSpectrum(0.5, ((1.0, 0.5),)), [], 0.0)


def test_bound_report(envelope):
    report = bound_report(envelope, PartialSpectralInfo(0.99, 3.0), "wam-n3")
    assert set(report) == {"f", "x0", "bound", "Q", "schedule_id"}
    assert report["bound"] < report["Q"]
