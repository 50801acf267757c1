"""Suppression products and ground-state probability bookkeeping.

Units: the minimum excitation energy and its period are both 1, so an
energy is an EnergyRatio x = E/Delta, a time is a TimeRatio tau = T/T0 and
the phase count of one iteration is zeta = x * tau. One iteration at time
tau multiplies the relative weight of a component at x by cos^2(pi x tau).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.utils.special import cos2pi

EnergyRatio = float
TimeRatio = float
PhaseCount = float

# running products below this switch to log-space accumulation
LOG_SPACE_THRESHOLD = 1e-300
WEIGHT_TOLERANCE = 1e-12


def _scalar_or_array(values):
    values = np.asarray(values, dtype=float)
    return float(values) if values.ndim == 0 else values


def _require_finite(name: str, value) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Schedule:
    """Ordered iteration times in units of T0."""
    times: Tuple[TimeRatio, ...]
    total: TimeRatio = field(init=False)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise UsageError("A schedule needs at least one iteration time")
        for t in times:
            if not math.isfinite(t) or t <= 0:
                raise DomainError(f"Iteration times must be positive and finite, got {t!r}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "total", math.fsum(times))

    def __len__(self) -> int:
        return len(self.times)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def concat(self, other: "Schedule") -> "Schedule":
        return Schedule(self.times + other.times)

    def scaled(self, factor: float) -> "Schedule":
        return Schedule(tuple(t * factor for t in self.times))


@dataclass(frozen=True)
class DiscreteSpectrum:
    """
    Ground-state weight plus excited components (x, weight).

    `gap` is the smallest admissible excitation; it defaults to 1 because
    energies are measured in units of the minimum excitation. Spectra given
    in units of an estimated gap may lower it, but never below zero.
    """
    ground_weight: float
    excited: Tuple[Tuple[EnergyRatio, float], ...]
    gap: EnergyRatio = 1.0

    def __post_init__(self):
        excited = tuple((float(x), float(w)) for x, w in self.excited)
        object.__setattr__(self, "excited", excited)
        object.__setattr__(self, "ground_weight", float(self.ground_weight))

        weights = [self.ground_weight] + [w for _, w in excited]
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise DomainError("Spectral weights must be finite and nonnegative")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOLERANCE:
            raise DomainError(
                f"Spectral weights must sum to 1 within {WEIGHT_TOLERANCE}, got {math.fsum(weights)!r}"
            )
        for x, _ in excited:
            if not math.isfinite(x) or x <= 0 or x < self.gap:
                raise DomainError(f"Excited energy ratio {x!r} lies below the gap {self.gap!r}")

    @property
    def energies(self) -> np.ndarray:
        return np.asarray([x for x, _ in self.excited], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray([w for _, w in self.excited], dtype=float)

    @property
    def excited_weight(self) -> float:
        return math.fsum(w for _, w in self.excited)


@dataclass(frozen=True)
class SuppressionProfile:
    """
    Suppression factor as a function of energy ratio.

    `decay_times`, when present, are times tau_k for which the profile is
    bounded by prod_k 1/(pi x tau_k)^2; search and envelope code uses it to
    cap the tail beyond a finite window.
    """
    evaluator: Callable[[np.ndarray], np.ndarray]
    zero_set: Tuple[EnergyRatio, ...] = ()
    decay_times: Optional[Tuple[TimeRatio, ...]] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(self.evaluator(x))

    def tail_bound(self, x) -> Optional[float]:
        """prod 1/(pi x tau_k)^2 at x, or None when the profile has no decaying envelope."""
        if not self.decay_times:
            return None
        x = float(x)
        return math.prod(1.0 / (math.pi * x * tau) ** 2 for tau in self.decay_times)

    @classmethod
    def constant(cls, value: float) -> "SuppressionProfile":
        """Profile equal to `value` at every excited energy (and 1 at x = 0)."""
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"Suppression must lie in [0, 1], got {value!r}")

        def evaluate(x):
            return np.where(x == 0.0, 1.0, value)

        return cls(evaluate, zero_set=())


def single_iteration_suppression(x, tau):
    """cos^2(pi x tau) for one iteration of time tau at energy ratio x."""
    x = _require_finite("x", x)
    tau = _require_finite("tau", tau)
    if np.any(x < 0):
        raise DomainError("Energy ratios must be nonnegative")
    if np.any(tau <= 0):
        raise DomainError("Iteration times must be positive")
    return _scalar_or_array(cos2pi(x * tau))


def _phase_grid(schedule: Schedule, x) -> np.ndarray:
    if not isinstance(schedule, Schedule):
        raise UsageError("Expected a Schedule")
    x = _require_finite("x", x)
    if np.any(x < 0):
        raise DomainError("Energy ratios must be nonnegative")
    return np.multiply.outer(x, schedule.as_array())


def schedule_log_suppression(schedule: Schedule, x):
    """Sum over iterations of log cos^2(pi x tau_j); -inf on exact zeros."""
    factors = cos2pi(_phase_grid(schedule, x))
    with np.errstate(divide="ignore"):
        return _scalar_or_array(np.sum(np.log(factors), axis=-1))


def schedule_suppression(schedule: Schedule, x):
    """
    Product of single iteration suppressions over the schedule.

    The product is taken directly; wherever the running product drops below
    LOG_SPACE_THRESHOLD the value is recomputed as exp of the summed logs.
    """
    factors = cos2pi(_phase_grid(schedule, x))
    running = np.cumprod(factors, axis=-1)
    direct = running[..., -1]
    tiny = (np.min(running, axis=-1) < LOG_SPACE_THRESHOLD) & (direct > 0)
    if np.any(tiny):
        with np.errstate(divide="ignore"):
            log_sum = np.sum(np.log(factors), axis=-1)
        direct = np.where(tiny, np.exp(log_sum), direct)
    return _scalar_or_array(np.clip(direct, 0.0, 1.0))


def schedule_profile(schedule: Schedule, zero_window: EnergyRatio = 64.0) -> SuppressionProfile:
    """Profile of a plain schedule with its zeros (m + 1/2)/tau_j up to zero_window."""
    zeros = set()
    for tau in schedule.times:
        m = np.arange(0, math.floor(zero_window * tau - 0.5) + 1)
        zeros.update(float(z) for z in (m + 0.5) / tau)
    return SuppressionProfile(
        evaluator=lambda x: schedule_suppression(schedule, x),
        zero_set=tuple(sorted(zeros)),
    )


def as_profile(profile_or_schedule: Union[SuppressionProfile, Schedule]) -> SuppressionProfile:
    if isinstance(profile_or_schedule, SuppressionProfile):
        return profile_or_schedule
    if isinstance(profile_or_schedule, Schedule):
        return schedule_profile(profile_or_schedule)
    raise UsageError("Expected a SuppressionProfile or a Schedule")


def ground_state_probability(p_g_initial: float, overall_suppression: float) -> float:
    """P_g / (P_g + (1 - P_g) S_E), the ground-state probability after consecutive successes."""
    if not 0.0 < p_g_initial <= 1.0:
        raise DomainError(
            f"Initial ground-state probability must lie in (0, 1], got {p_g_initial!r}; "
            "a state without ground-state overlap cannot be projected"
        )
    if not math.isfinite(overall_suppression) or overall_suppression < 0:
        raise DomainError(f"Suppression must be nonnegative, got {overall_suppression!r}")
    return p_g_initial / (p_g_initial + (1.0 - p_g_initial) * overall_suppression)


def overall_excited_suppression(
    spectrum: DiscreteSpectrum,
    profile: Union[SuppressionProfile, Schedule],
) -> float:
    """Weighted average of the profile over excited components, S_E."""
    if not spectrum.excited:
        raise DomainError("Spectrum has no excited components")
    weights = spectrum.weights
    total = math.fsum(weights)
    if total <= 0:
        raise DomainError("Excited components carry zero total weight")
    values = np.asarray(as_profile(profile)(spectrum.energies), dtype=float)
    return float(np.dot(weights, values) / total)


def success_probability(
    spectrum: DiscreteSpectrum,
    schedule: Union[Schedule, SuppressionProfile],
) -> float:
    """|alpha_g|^2 + sum_c s(x_c)|alpha_c|^2, the chance that every iteration succeeds."""
    if not spectrum.excited:
        return spectrum.ground_weight
    values = np.asarray(as_profile(schedule)(spectrum.energies), dtype=float)
    excited = math.fsum(spectrum.weights * values)
    return spectrum.ground_weight + excited


def ground_state_probability_after(
    spectrum: DiscreteSpectrum,
    schedule: Union[Schedule, SuppressionProfile],
) -> float:
    if spectrum.ground_weight <= 0:
        raise DomainError("Spectrum has no ground-state weight")
    return spectrum.ground_weight / success_probability(spectrum, schedule)


def expected_preparations(
    spectrum: DiscreteSpectrum,
    schedule: Union[Schedule, SuppressionProfile],
) -> float:
    """Expected number of times the initial state has to be prepared, 1/P^{n,s}."""
    probability = success_probability(spectrum, schedule)
    if probability <= 0:
        raise DomainError("Schedule never succeeds on this spectrum")
    return 1.0 / probability


def expected_total_time(schedule: Union[Schedule, float], ground_weight: float) -> TimeRatio:
    """Schedule time divided by ground-state weight; assumes residual excited success is negligible."""
    if not 0.0 < ground_weight <= 1.0:
        raise DomainError(f"Ground-state weight must lie in (0, 1], got {ground_weight!r}")
    total = schedule.total if isinstance(schedule, Schedule) else float(schedule)
    if not math.isfinite(total) or total <= 0:
        raise DomainError(f"Total time must be positive, got {total!r}")
    return total / ground_weight
