"""Super iterations: ladders of iterations with times T/2, T/4, ..., T/2^N.

A super iteration of base time T (its nominal total) suppresses a component
at energy ratio x by j0^2(pi x T) in the infinite-depth limit and by
prod_{k=1..N} cos^2(pi x T / 2^k) when truncated at N rungs.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from rodeo_schedules.core import EnergyRatio, PhaseCount, Schedule, SuppressionProfile, TimeRatio
from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.rra import rra_mean_total
from rodeo_schedules.utils.special import cos2pi, j0pi, j0pi_squared

DEFAULT_DEPTH = 32
# leading super iteration time of the single-super WAM schedule
DEFAULT_LEADING_TIME = 0.8129
# depths above this evaluate the truncation through the Bessel ratio
RATIO_FORM_MIN_DEPTH = 8
# ratio denominators smaller than this fall back to the explicit product
_RATIO_DENOMINATOR_FLOOR = 1e-3


@lru_cache(maxsize=None)
def first_side_peak() -> PhaseCount:
    """
    Location of the first maximum of j0^2(pi z) beyond z = 1.

    j0'(t) vanishes where tan t = t; the first root past pi lies below 3pi/2.
    """
    root = brentq(lambda t: t * math.cos(t) - math.sin(t), math.pi + 0.1, 1.5 * math.pi - 1e-9, xtol=1e-15)
    return root / math.pi


@dataclass(frozen=True)
class SuperIteration:
    base_time: TimeRatio
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if not math.isfinite(self.base_time) or self.base_time <= 0:
            raise DomainError(f"Super iteration base time must be positive, got {self.base_time!r}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise DomainError(f"Super iteration depth must be a positive integer, got {self.depth!r}")
        object.__setattr__(self, "base_time", float(self.base_time))
        object.__setattr__(self, "depth", int(self.depth))

    @property
    def rung_times(self) -> Tuple[TimeRatio, ...]:
        return tuple(math.ldexp(self.base_time, -k) for k in range(1, self.depth + 1))

    @property
    def expanded_total(self) -> TimeRatio:
        return self.base_time * (1.0 - math.ldexp(1.0, -self.depth))


@dataclass(frozen=True)
class SuperSchedule:
    supers: Tuple[SuperIteration, ...]
    total: TimeRatio = field(init=False)

    def __post_init__(self):
        supers = tuple(self.supers)
        if not supers:
            raise UsageError("A super schedule needs at least one super iteration")
        object.__setattr__(self, "supers", supers)
        object.__setattr__(self, "total", math.fsum(s.expanded_total for s in supers))

    @classmethod
    def from_bases(cls, bases: Iterable[float], depth: int = DEFAULT_DEPTH) -> "SuperSchedule":
        return cls(tuple(SuperIteration(b, depth) for b in bases))

    @property
    def bases(self) -> Tuple[TimeRatio, ...]:
        return tuple(s.base_time for s in self.supers)

    @property
    def nominal_total(self) -> TimeRatio:
        """Sum of base times, the infinite-depth total."""
        return math.fsum(self.bases)


def _require_phase(zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if not np.all(np.isfinite(zeta)) or np.any(zeta < 0):
        raise DomainError("Phase counts must be finite and nonnegative")
    return zeta


def _scalar_or_array(values):
    values = np.asarray(values, dtype=float)
    return float(values) if values.ndim == 0 else values


def super_suppression(zeta_sup):
    """j0^2(pi zeta), the infinite super iteration suppression; 1 at zeta = 0."""
    return _scalar_or_array(j0pi_squared(_require_phase(zeta_sup)))


def truncated_super_product(zeta_sup, depth: int):
    """prod_{k=1..N} cos^2(pi zeta / 2^k), evaluated factor by factor."""
    zeta = _require_phase(zeta_sup)
    scales = np.ldexp(1.0, -np.arange(1, int(depth) + 1))
    return _scalar_or_array(np.prod(cos2pi(np.multiply.outer(zeta, scales)), axis=-1))


def truncated_super_suppression(zeta_sup, depth: int):
    """
    Suppression of a super iteration truncated at `depth` rungs.

    Deep ladders use j0^2(pi zeta)/j0^2(pi zeta/2^N); shallow ladders and
    points where the denominator nearly vanishes use the explicit product.
    """
    if int(depth) != depth or depth < 1:
        raise DomainError(f"Depth must be a positive integer, got {depth!r}")
    depth = int(depth)
    zeta = _require_phase(zeta_sup)
    if depth < RATIO_FORM_MIN_DEPTH:
        return truncated_super_product(zeta, depth)

    denominator = j0pi(np.ldexp(zeta, -depth))
    usable = np.abs(denominator) >= _RATIO_DENOMINATOR_FLOOR
    ratio = np.square(j0pi(zeta) / np.where(usable, denominator, 1.0))
    if np.all(usable):
        return _scalar_or_array(np.clip(ratio, 0.0, 1.0))
    product = np.asarray(truncated_super_product(zeta, depth))
    return _scalar_or_array(np.clip(np.where(usable, ratio, product), 0.0, 1.0))


def max_valid_energy(depth: int, leading_time: TimeRatio = DEFAULT_LEADING_TIME) -> EnergyRatio:
    """
    Energy ratio up to which a single truncated super iteration keeps its
    infinite-depth worst-case bound: (2^N - z_peak)/T_lead, with z_peak the
    first side peak of j0^2.
    """
    if int(depth) != depth or depth < 1:
        raise DomainError(f"Depth must be a positive integer, got {depth!r}")
    if leading_time <= 0:
        raise DomainError(f"Leading time must be positive, got {leading_time!r}")
    return (math.ldexp(1.0, int(depth)) - first_side_peak()) / leading_time


def expand(super_schedule: SuperSchedule) -> Schedule:
    """Flatten every super iteration into its rung times."""
    if not isinstance(super_schedule, SuperSchedule):
        raise UsageError("Expected a SuperSchedule")
    times = []
    for sup in super_schedule.supers:
        times.extend(sup.rung_times)
    return Schedule(tuple(times))


def iteration_count(super_schedule: SuperSchedule) -> int:
    return sum(s.depth for s in super_schedule.supers)


def super_profile(
    bases: Sequence[TimeRatio],
    depth: Optional[int] = None,
    zero_window: EnergyRatio = 64.0,
) -> SuppressionProfile:
    """
    Profile of a product of super iterations with the given base times.

    depth=None uses the infinite-depth j0^2 closed form; the profile then
    also carries the 1/(pi x T)^2 tail envelope.
    """
    bases = tuple(float(b) for b in bases)
    if not bases or any(b <= 0 for b in bases):
        raise UsageError("Super iteration base times must be a nonempty list of positive values")
    base_array = np.asarray(bases)

    if depth is None:
        def evaluate(x):
            return np.prod(j0pi_squared(np.multiply.outer(x, base_array)), axis=-1)
    else:
        def evaluate(x):
            return np.prod(truncated_super_suppression(np.multiply.outer(x, base_array), depth), axis=-1)

    zeros = set()
    for base in bases:
        m = np.arange(1, math.floor(zero_window * base) + 1)
        if depth is not None:
            m = m[np.mod(m, 2 ** min(depth, 62)) != 0]
        zeros.update(float(z) for z in m / base)
    return SuppressionProfile(
        evaluator=evaluate,
        zero_set=tuple(sorted(zeros)),
        decay_times=bases if depth is None else None,
    )


def rra_advantage(x_grid, base_time: TimeRatio = 1.0, n: int = 3) -> np.ndarray:
    """
    Ratio of the random-schedule ensemble mean at equal total time to the
    single super iteration suppression, over an energy grid.
    """
    x = np.asarray(x_grid, dtype=float)
    sup = np.asarray(j0pi_squared(x * base_time))
    mean = np.asarray(rra_mean_total(x * base_time, n))
    with np.errstate(divide="ignore"):
        return np.where(sup > 0, mean / np.where(sup > 0, sup, 1.0), np.inf)
