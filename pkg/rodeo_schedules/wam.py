"""Whac-a-Mole schedule optimizer.

Each cycle locates the largest suppression peak at x >= 1, adds a super
iteration whose first Bessel zero sits exactly on that peak and then scales
every time down until the suppression at x = 1 equals the new worst peak.

The state keeps the unscaled base times, whose product profile always has
its first zero at x = 1. Scaling by lambda maps that profile onto x/lambda,
so all peak searches run on the unscaled profile.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from rodeo_schedules.core import EnergyRatio, SuppressionProfile, TimeRatio
from rodeo_schedules.exceptions import DomainError, NumericError, UsageError
from rodeo_schedules.rra import solve_separatrix
from rodeo_schedules.superiter import DEFAULT_DEPTH, SuperSchedule, super_profile

logger = logging.getLogger(__name__)

POINTS_PER_UNIT = 20_000
REFINE_CANDIDATES = 5
RESCALE_BRACKET = (0.7, 1.0)
RESCALE_XTOL = 1e-10
PEAK_XTOL = 1e-12
# search window is 4/min(base) before any tail-driven extension
WINDOW_FACTOR = 4.0
MAX_WINDOW_DOUBLINGS = 16
_GRID_CHUNK = 1 << 16


@dataclass(frozen=True)
class PeakScan:
    """Grid samples of a profile plus its refined local maxima, sorted by x."""
    grid: np.ndarray
    values: np.ndarray
    maxima: Tuple[Tuple[EnergyRatio, float], ...]

    @property
    def best(self) -> Tuple[EnergyRatio, float]:
        # largest value, smaller x on ties
        return max(self.maxima, key=lambda peak: (peak[1], -peak[0]))


@dataclass(frozen=True)
class WamRow:
    n: int
    q: float
    total_time: TimeRatio
    times: Tuple[TimeRatio, ...]
    scale: float = 1.0


@dataclass(frozen=True)
class WamState:
    """
    Optimizer state.

    `bases` are the unscaled base times and `peak` the worst (x, s) of their
    product profile. `scale` maps them onto the physical times, and `worst`
    is the worst peak of the scaled profile.
    """
    bases: Tuple[TimeRatio, ...]
    peak: Tuple[EnergyRatio, float]
    worst: Tuple[EnergyRatio, float]
    scale: float = 1.0
    depth: int = DEFAULT_DEPTH
    history: Tuple[WamRow, ...] = field(default=())

    def __post_init__(self):
        if not self.bases or any(not math.isfinite(b) or b <= 0 for b in self.bases):
            raise DomainError("WAM base times must be positive")
        if self.worst[0] < 1.0 - 1e-12:
            raise NumericError(f"Worst peak at x={self.worst[0]!r} lies below the gap")

    @property
    def times(self) -> Tuple[TimeRatio, ...]:
        return tuple(b * self.scale for b in self.bases)

    @property
    def total_time(self) -> TimeRatio:
        return math.fsum(self.times)

    @property
    def super_schedule(self) -> SuperSchedule:
        return SuperSchedule.from_bases(self.times, self.depth)

    def profile(self) -> SuppressionProfile:
        return super_profile(self.times)


def _evaluate_chunked(profile: SuppressionProfile, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for start in range(0, x.size, _GRID_CHUNK):
        stop = start + _GRID_CHUNK
        out[start:stop] = profile(x[start:stop])
    return out


def _refine(profile: SuppressionProfile, grid: np.ndarray, values: np.ndarray, i: int) -> Tuple[float, float]:
    """Golden-section refinement of grid maximum i inside its neighbouring grid cells."""
    x0, v0 = float(grid[i]), float(values[i])
    if i == 0 or i == grid.size - 1:
        return x0, v0
    a, c = float(grid[i - 1]), float(grid[i + 1])
    try:
        result = minimize_scalar(
            lambda x: -float(profile(x)),
            bracket=(a, x0, c),
            method="golden",
            options={"xtol": PEAK_XTOL},
        )
    except ValueError:
        # plateau: no strict bracket, the grid value stands
        return x0, v0
    x, v = float(result.x), float(-result.fun)
    if not a <= x <= c or v < v0:
        return x0, v0
    return x, v


def scan_profile(
    profile: SuppressionProfile,
    x_min: EnergyRatio,
    x_max: EnergyRatio,
    points_per_unit: int = POINTS_PER_UNIT,
    candidates: Optional[int] = REFINE_CANDIDATES,
) -> PeakScan:
    """
    Sample the profile on a uniform grid and refine local maxima.

    `candidates` limits refinement to the highest grid maxima; None refines
    every local maximum.
    """
    if not x_min < x_max:
        raise UsageError(f"Empty search interval [{x_min}, {x_max}]")
    count = int(math.ceil((x_max - x_min) * points_per_unit)) + 1
    grid = np.linspace(x_min, x_max, max(count, 3))
    values = _evaluate_chunked(profile, grid)

    left = np.concatenate(([True], values[1:] >= values[:-1]))
    right = np.concatenate((values[:-1] >= values[1:], [True]))
    local = np.flatnonzero(left & right)
    # stable sort keeps the smaller x first among equal values
    order = local[np.argsort(-values[local], kind="stable")]
    if candidates is not None:
        order = order[:candidates]

    maxima = sorted(_refine(profile, grid, values, int(i)) for i in order)
    logger.debug("Scanned %d points on [%g, %g], refined %d maxima", grid.size, x_min, x_max, len(maxima))
    return PeakScan(grid=grid, values=values, maxima=tuple(maxima))


def find_worst_peak(
    profile: SuppressionProfile,
    x_min: EnergyRatio,
    x_max: EnergyRatio,
    points_per_unit: int = POINTS_PER_UNIT,
    candidates: int = REFINE_CANDIDATES,
) -> Tuple[EnergyRatio, float]:
    """Global maximum (x, s) of the profile on [x_min, x_max]; ties go to the smaller x."""
    return scan_profile(profile, x_min, x_max, points_per_unit, candidates).best


def search_window(bases: Sequence[TimeRatio]) -> EnergyRatio:
    return WINDOW_FACTOR / min(bases)


def worst_peak_above_gap(
    bases: Sequence[TimeRatio],
    points_per_unit: int = POINTS_PER_UNIT,
    candidates: int = REFINE_CANDIDATES,
) -> Tuple[EnergyRatio, float]:
    """
    Worst peak over all x >= 1 of the infinite-depth product profile.

    The window grows until the 1/(pi x tau)^2 tail bound at its right edge
    drops below the worst value found inside it.
    """
    profile = super_profile(bases)
    x_max = search_window(bases)
    for _ in range(MAX_WINDOW_DOUBLINGS):
        peak = find_worst_peak(profile, 1.0, x_max, points_per_unit, candidates)
        tail = profile.tail_bound(x_max)
        logger.debug("Window [1, %g]: peak %.6g at x=%.8f, tail bound %.3g", x_max, peak[1], peak[0], tail)
        if tail < peak[1] or (tail == 0.0 and peak[1] == 0.0):
            return peak
        x_max *= 2.0
    raise NumericError("Tail bound never dropped below the worst peak")


def initial_state(
    depth: int = DEFAULT_DEPTH,
    points_per_unit: int = POINTS_PER_UNIT,
    candidates: int = REFINE_CANDIDATES,
) -> WamState:
    """A single super iteration of base 1, not yet rescaled."""
    peak = worst_peak_above_gap((1.0,), points_per_unit, candidates)
    return WamState(bases=(1.0,), peak=peak, worst=peak, scale=1.0, depth=depth)


def whack(
    state: WamState,
    location: Optional[EnergyRatio] = None,
    points_per_unit: int = POINTS_PER_UNIT,
    candidates: int = REFINE_CANDIDATES,
) -> WamState:
    """
    Append a super iteration with base 1/x*, zeroing the profile at x*.

    x* defaults to the state's worst unscaled peak. The returned state is
    unscaled (scale 1) until rescale_to_equalize runs.
    """
    x_star = state.peak[0] if location is None else float(location)
    if x_star < 1.0:
        raise NumericError(f"Peak location {x_star!r} lies below the gap")
    bases = state.bases + (1.0 / x_star,)
    peak = worst_peak_above_gap(bases, points_per_unit, candidates)
    logger.info("Whacked peak at x=%.8f; next worst %.6g at x=%.8f", x_star, peak[1], peak[0])
    return replace(state, bases=bases, peak=peak, worst=peak, scale=1.0)


def rescale_to_equalize(state: WamState) -> Tuple[float, WamState]:
    """
    Scale all times by lambda in (0, 1] so the suppression at x = 1 equals
    the worst peak. Every unscaled base is at most 1, so the unscaled
    profile decreases on [lambda, 1] and the condition is
    s_unscaled(lambda) = max_{x >= 1} s_unscaled(x).
    """
    worst_value = state.peak[1]
    if worst_value <= 0.0:
        return 1.0, replace(state, scale=1.0, worst=(1.0, 0.0))

    profile = super_profile(state.bases)

    def excess(lam):
        return float(profile(lam)) - worst_value

    lo, hi = RESCALE_BRACKET
    if excess(lo) < 0.0 or excess(hi) > 0.0:
        raise NumericError(f"No rescale fixed point in [{lo}, {hi}]")
    scale = bisect(excess, lo, hi, xtol=RESCALE_XTOL)
    logger.info("Rescaled %d super iterations by %.10f", len(state.bases), scale)
    return scale, replace(state, scale=scale, worst=(1.0, worst_value))


def _row(state: WamState) -> WamRow:
    return WamRow(
        n=len(state.bases),
        q=state.worst[1],
        total_time=state.total_time,
        times=state.times,
        scale=state.scale,
    )


def wam_optimize(
    cycles: int,
    depth: int = DEFAULT_DEPTH,
    points_per_unit: int = POINTS_PER_UNIT,
    candidates: int = REFINE_CANDIDATES,
) -> WamState:
    """Run the optimizer for `cycles` cycles; the history holds one row per cycle."""
    if int(cycles) != cycles or cycles < 1:
        raise DomainError(f"Cycles must be a positive integer, got {cycles!r}")
    state = initial_state(depth, points_per_unit, candidates)
    _, state = rescale_to_equalize(state)
    history: List[WamRow] = [_row(state)]
    for _ in range(int(cycles) - 1):
        state = whack(state, points_per_unit=points_per_unit, candidates=candidates)
        _, state = rescale_to_equalize(state)
        history.append(_row(state))
        logger.info("Cycle %d: Q=%.6g total time %.6f", len(history), state.worst[1], state.total_time)
    return replace(state, history=tuple(history))


def worst_case_bound(state: WamState) -> float:
    """Q, the largest suppression at any x >= 1; bounds S_E for every spectrum above the gap."""
    return state.worst[1]


def wam_table(state: WamState) -> List[WamRow]:
    if not state.history:
        return [_row(state)]
    return list(state.history)


def rra_comparison(row: WamRow, beta: Optional[float] = None) -> float:
    """How many times smaller Q is than the best random-schedule mean at the same total time."""
    if beta is None:
        beta = solve_separatrix().beta
    if row.q <= 0:
        return math.inf
    return math.exp(-beta * row.total_time) / row.q
