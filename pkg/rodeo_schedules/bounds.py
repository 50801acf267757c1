"""Monotone upper envelopes and bounds that use partial spectral information."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from rodeo_schedules.core import DiscreteSpectrum, EnergyRatio, SuppressionProfile, TimeRatio, overall_excited_suppression
from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.superiter import super_profile
from rodeo_schedules.wam import POINTS_PER_UNIT, WamRow, scan_profile

logger = logging.getLogger(__name__)

DEFAULT_ENVELOPE_X_MAX = 64.0


@dataclass(frozen=True, eq=False)
class MonotoneEnvelope:
    """
    Least non-increasing majorant s^UB of a profile on its sample set.

    Between breakpoints the envelope is linear; past `x_max` it is the
    smaller of the last breakpoint and the analytic tail bound, when the
    profile has one.
    """
    x: np.ndarray
    values: np.ndarray
    decay_times: Optional[Tuple[TimeRatio, ...]] = None

    def __post_init__(self):
        if self.x.size == 0 or self.x.shape != self.values.shape:
            raise UsageError("Envelope breakpoints must be nonempty and matched")
        if np.any(np.diff(self.x) < 0) or np.any(np.diff(self.values) > 0):
            raise DomainError("Envelope breakpoints must be sorted with non-increasing values")

    @property
    def x_min(self) -> EnergyRatio:
        return float(self.x[0])

    @property
    def x_max(self) -> EnergyRatio:
        return float(self.x[-1])

    @property
    def breakpoints(self):
        return list(zip(self.x.tolist(), self.values.tolist()))

    def _tail(self, x: np.ndarray) -> np.ndarray:
        cap = np.prod([1.0 / np.square(np.pi * x * tau) for tau in self.decay_times], axis=0)
        return np.minimum(self.values[-1], cap)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_min):
            raise DomainError(f"Envelope starts at x={self.x_min}")
        beyond = x > self.x_max
        if np.any(beyond) and not self.decay_times:
            raise DomainError(f"Envelope ends at x={self.x_max} and the profile has no tail bound")
        inside = np.interp(x, self.x, self.values)
        if np.any(beyond):
            inside = np.where(beyond, self._tail(np.where(beyond, x, self.x_max)), inside)
        return float(inside) if inside.ndim == 0 else inside


@dataclass(frozen=True)
class PartialSpectralInfo:
    """Fraction f of the excited weight lies at or above x0."""
    f: float
    x0: EnergyRatio

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise DomainError(f"Fraction f must lie in [0, 1], got {self.f!r}")
        if not math.isfinite(self.x0) or self.x0 < 1.0:
            raise DomainError(f"x0 must be at least 1, got {self.x0!r}")


@dataclass(frozen=True)
class TableScanResult:
    """Outcome of a table scan; `found` is False when no row meets the threshold."""
    found: bool
    index: int
    row: WamRow
    s_e: float
    threshold: float


def monotone_envelope(
    profile: SuppressionProfile,
    x_min: EnergyRatio = 1.0,
    x_max: EnergyRatio = DEFAULT_ENVELOPE_X_MAX,
    points_per_unit: int = POINTS_PER_UNIT,
) -> MonotoneEnvelope:
    """
    s^UB(x) = sup_{y >= x} s(y) as a right-to-left running maximum over the
    grid plus every refined local maximum. The supremum past x_max is taken
    from the profile's tail bound at x_max.
    """
    if x_min < 1.0:
        raise DomainError(f"Envelope must start at or above the gap, got {x_min!r}")
    scan = scan_profile(profile, x_min, x_max, points_per_unit, candidates=None)

    peaks = np.asarray(scan.maxima, dtype=float).reshape(-1, 2)
    x = np.concatenate((scan.grid, peaks[:, 0]))
    values = np.concatenate((scan.values, peaks[:, 1]))
    order = np.argsort(x, kind="stable")
    x, values = x[order], values[order]

    tail = profile.tail_bound(x_max) if profile.decay_times else 0.0
    upper = np.maximum.accumulate(values[::-1])[::-1]
    upper = np.maximum(upper, tail)

    # interior points of a plateau carry no information under linear interpolation
    keep = np.ones(x.size, dtype=bool)
    keep[1:-1] = (upper[1:-1] != upper[:-2]) | (upper[1:-1] != upper[2:])
    logger.debug("Envelope on [%g, %g]: %d of %d breakpoints kept", x_min, x_max, keep.sum(), x.size)
    return MonotoneEnvelope(x=x[keep], values=upper[keep], decay_times=profile.decay_times)


def partial_info_bound(envelope: MonotoneEnvelope, info: PartialSpectralInfo) -> float:
    """(1 - f) s^UB(1) + f s^UB(x0); never above s^UB(1) = Q."""
    if info.x0 < envelope.x_min or (info.x0 > envelope.x_max and not envelope.decay_times):
        raise DomainError(f"x0={info.x0} lies outside the envelope domain")
    q = envelope(envelope.x_min)
    return (1.0 - info.f) * q + info.f * envelope(info.x0)


def exact_SE_from_table(
    spectrum: DiscreteSpectrum,
    table: Sequence[WamRow],
    threshold: float,
) -> TableScanResult:
    """
    Shortest schedule in the table whose exact S_E is at most `threshold`.

    Rows are tried in order of total time. When none qualifies the result
    has found=False and carries the row with the smallest S_E.
    """
    if not table:
        raise UsageError("Schedule table is empty")
    if threshold < 0:
        raise DomainError(f"Threshold must be nonnegative, got {threshold!r}")

    best: Optional[TableScanResult] = None
    ranked = sorted(enumerate(table), key=lambda item: item[1].total_time)
    for index, row in ranked:
        s_e = overall_excited_suppression(spectrum, super_profile(row.times))
        logger.debug("Row n=%d: S_E=%.6g", row.n, s_e)
        if s_e <= threshold:
            return TableScanResult(found=True, index=index, row=row, s_e=s_e, threshold=threshold)
        if best is None or s_e < best.s_e:
            best = TableScanResult(found=False, index=index, row=row, s_e=s_e, threshold=threshold)
    logger.info("No schedule reaches S_E <= %g; best %.6g at n=%d", threshold, best.s_e, best.row.n)
    return best


def bound_report(envelope: MonotoneEnvelope, info: PartialSpectralInfo, schedule_id: str) -> dict:
    return {
        "f": info.f,
        "x0": info.x0,
        "bound": partial_info_bound(envelope, info),
        "Q": envelope(envelope.x_min),
        "schedule_id": schedule_id,
    }
