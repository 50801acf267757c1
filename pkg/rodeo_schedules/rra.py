"""Random rodeo algorithm: ensemble statistics and Monte Carlo.

Iteration times are drawn from a half-normal distribution with mean T. All
closed forms below take the per-iteration phase count zeta = x*T unless the
name says `total`, in which case zeta_tot = n*zeta.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import bisect, minimize_scalar
from tqdm import tqdm

from rodeo_schedules.core import PhaseCount, Schedule, TimeRatio, schedule_suppression
from rodeo_schedules.exceptions import DomainError, NumericError, UsageError
from rodeo_schedules.utils.rng import TRIALS_PER_BLOCK, RngStream, trial_blocks
from rodeo_schedules.utils.special import cos2pi

logger = logging.getLogger(__name__)

PI3 = math.pi ** 3

SEPARATRIX_BRACKET = (3.0, 6.0)
SEPARATRIX_XTOL = 1e-12
SEPARATRIX_MAXITER = 200
# half-normal tail beyond this many scale units is dropped from the quadrature
QUADRATURE_TAIL_SIGMAS = 10.0
QUADRATURE_RTOL = 1e-8
# beyond this phase count the interval-per-zero quadrature gives way to the series
QUADRATURE_MAX_ZETA = 20.0


class Statistic(str, Enum):
    GEOMETRIC = "geometric"
    ARITHMETIC = "arithmetic"
    RMS = "rms"


@dataclass(frozen=True)
class HalfNormalTimeDistribution:
    """Half-normal iteration times whose mean is `mean_time`."""
    mean_time: TimeRatio = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mean_time) or self.mean_time <= 0:
            raise DomainError(f"Mean time must be positive, got {self.mean_time!r}")

    @property
    def scale(self) -> float:
        return self.mean_time * math.sqrt(math.pi / 2.0)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        sigma = self.scale
        pdf = math.sqrt(2.0 / math.pi) / sigma * np.exp(-0.5 * (t / sigma) ** 2)
        return np.where(t >= 0, pdf, 0.0)

    def draw(self, generator: np.random.Generator, size) -> np.ndarray:
        return np.abs(generator.standard_normal(size)) * self.scale


@dataclass(frozen=True)
class EnsembleStatistics:
    arithmetic_mean: float
    geometric_mean: float
    rms: float
    sigma_over_mean: float
    n: int
    zeta: PhaseCount


@dataclass(frozen=True)
class MonteCarloStatistics:
    statistics: EnsembleStatistics
    median: float
    stderr_mean: float
    stderr_rms: float
    stderr_log_mean: float
    trials: int
    seed: int


@dataclass(frozen=True)
class SeparatrixFit:
    """n = alpha * zeta_tot minimises the statistic, which then equals exp(-beta * zeta_tot)."""
    alpha: float
    beta: float
    statistic: Statistic = Statistic.ARITHMETIC


@dataclass(frozen=True)
class SingleRunTrace:
    zeta: np.ndarray
    suppression: np.ndarray
    fraction_below: float
    window_average: float
    threshold: float


def _require_n(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"Iteration count must be a positive integer, got {n!r}")
    return int(n)


def _require_zeta(zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if not np.all(np.isfinite(zeta)) or np.any(zeta < 0):
        raise DomainError("Phase counts must be finite and nonnegative")
    return zeta


def _scalar_or_array(values):
    values = np.asarray(values, dtype=float)
    return float(values) if values.ndim == 0 else values


def _mean_factor(zeta):
    return 0.5 * (1.0 + np.exp(-PI3 * np.square(zeta)))


def _rms_factor(zeta):
    """Per-iteration second moment divided by 3/8."""
    z2 = np.square(zeta)
    return 1.0 + np.exp(-4.0 * PI3 * z2) / 3.0 + 4.0 * np.exp(-PI3 * z2) / 3.0


def rra_mean_per_iteration(zeta, n: int):
    """(1/2)^n (1 + exp(-pi^3 zeta^2))^n."""
    n = _require_n(n)
    return _scalar_or_array(_mean_factor(_require_zeta(zeta)) ** n)


def rra_mean_total(zeta_tot, n: int):
    """Ensemble mean at fixed total phase count, (1/2)^n (1 + exp(-pi^3 zeta_tot^2/n^2))^n."""
    n = _require_n(n)
    return _scalar_or_array(_mean_factor(_require_zeta(zeta_tot) / n) ** n)


def rra_rms(zeta, n: int):
    """(3/8)^{n/2} (1 + e^{-4 pi^3 zeta^2}/3 + 4 e^{-pi^3 zeta^2}/3)^{n/2}."""
    n = _require_n(n)
    return _scalar_or_array((0.375 * _rms_factor(_require_zeta(zeta))) ** (0.5 * n))


def rra_sigma_over_mean(zeta, n: int):
    """Standard deviation over arithmetic mean; rounding below zero is clamped."""
    n = _require_n(n)
    zeta = _require_zeta(zeta)
    ratio = 1.5 * _rms_factor(zeta) / np.square(2.0 * _mean_factor(zeta))
    radicand = np.expm1(n * np.log(ratio))
    return _scalar_or_array(np.sqrt(np.maximum(radicand, 0.0)))


def _log_cos2_scalar(z: float) -> float:
    """log cos^2(pi z) for a scalar, accurate next to the zeros."""
    w = z - round(z)
    return 2.0 * math.log(max(math.sin(math.pi * (0.5 - abs(w))), 5e-324))


@lru_cache(maxsize=4096)
def geometric_log_rate(zeta: float) -> float:
    """
    E[log cos^2(pi zeta T)] for half-normal T with unit mean.

    The integral is split at every zero T_k = (k + 1/2)/zeta of the cosine so
    each piece carries its logarithmic singularities at the endpoints, where
    the adaptive Gauss-Kronrod rule never evaluates.
    Above QUADRATURE_MAX_ZETA the number of pieces grows without bound and the
    exponentially convergent series is used instead.
    """
    zeta = float(zeta)
    if not math.isfinite(zeta) or zeta < 0:
        raise DomainError(f"Phase count must be finite and nonnegative, got {zeta!r}")
    if zeta == 0.0:
        return 0.0
    if zeta > QUADRATURE_MAX_ZETA:
        return geometric_log_rate_series(zeta)

    dist = HalfNormalTimeDistribution(1.0)
    sigma = dist.scale
    norm = math.sqrt(2.0 / math.pi) / sigma
    upper = QUADRATURE_TAIL_SIGMAS * sigma

    def integrand(t):
        return _log_cos2_scalar(zeta * t) * norm * math.exp(-0.5 * (t / sigma) ** 2)

    zeros = (np.arange(0, math.floor(upper * zeta - 0.5) + 1) + 0.5) / zeta
    edges = np.concatenate(([0.0], zeros, [upper]))
    total = 0.0
    error = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            for a, b in zip(edges[:-1], edges[1:]):
                if b <= a:
                    continue
                value, err = quad(integrand, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)
                total += value
                error += err
        except IntegrationWarning as e:
            raise NumericError(f"Geometric mean quadrature failed at zeta={zeta}: {e}")
    if error > QUADRATURE_RTOL * max(abs(total), 1e-300):
        raise NumericError(
            f"Geometric mean quadrature did not reach relative tolerance {QUADRATURE_RTOL} at zeta={zeta}"
        )
    return total


def geometric_log_rate_series(zeta: float, tol: float = 1e-17) -> float:
    """
    E[log cos^2(pi zeta T)] from the Fourier series of log cos^2 and the
    half-normal characteristic function E[cos(w T)] = exp(-sigma^2 w^2/2):
    -2 log 2 - 2 sum_k (-1)^k exp(-pi^3 k^2 zeta^2)/k.
    """
    zeta = float(zeta)
    if zeta <= 0:
        raise DomainError("The series needs a positive phase count")
    total = 0.0
    k = 1
    while True:
        term = math.exp(-PI3 * k * k * zeta * zeta) / k
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return -2.0 * math.log(2.0) + 2.0 * total


def rra_geometric_mean(zeta: float, n: int) -> float:
    """exp(n E[log cos^2(pi zeta T)]); tends to 4^{-n} at large zeta."""
    n = _require_n(n)
    return math.exp(n * geometric_log_rate(float(zeta)))


def _log_rate(statistic: Statistic, y: float) -> float:
    """Per-iteration log of the statistic at per-iteration phase count y."""
    if statistic is Statistic.ARITHMETIC:
        return math.log(0.5 * (1.0 + math.exp(-PI3 * y * y)))
    if statistic is Statistic.RMS:
        return 0.5 * math.log(0.375 * float(_rms_factor(y)))
    return geometric_log_rate(y)


def _separatrix_residual(alpha: float) -> float:
    """Stationarity of n log((1 + exp(-pi^3 zeta_tot^2/n^2))/2) in n, at n = alpha zeta_tot."""
    c = PI3 / (alpha * alpha)
    return 2.0 * c / (1.0 + math.exp(c)) + math.log(0.5 * (1.0 + math.exp(-c)))


@lru_cache(maxsize=None)
def solve_separatrix() -> SeparatrixFit:
    """Root of the separatrix condition bracketed on [3, 6]; alpha ~ 4.271, beta ~ 2.244."""
    lo, hi = SEPARATRIX_BRACKET
    if _separatrix_residual(lo) * _separatrix_residual(hi) > 0:
        raise NumericError("Separatrix bracket does not contain a sign change")
    alpha = bisect(_separatrix_residual, lo, hi, xtol=SEPARATRIX_XTOL, maxiter=SEPARATRIX_MAXITER)
    beta = -alpha * math.log(0.5 * (1.0 + math.exp(-PI3 / (alpha * alpha))))
    logger.debug("Separatrix alpha=%.12f beta=%.12f", alpha, beta)
    return SeparatrixFit(alpha=alpha, beta=beta, statistic=Statistic.ARITHMETIC)


@lru_cache(maxsize=None)
def separatrix_fit_for(statistic) -> SeparatrixFit:
    """
    Minimise the statistic over a continuous iteration count at fixed total
    phase count. With n = alpha zeta_tot the log statistic is
    zeta_tot * alpha * g(1/alpha), so beta = -min_alpha alpha g(1/alpha).
    """
    statistic = Statistic(statistic)
    if statistic is Statistic.ARITHMETIC:
        return solve_separatrix()

    result = minimize_scalar(
        lambda alpha: alpha * _log_rate(statistic, 1.0 / alpha),
        bounds=(1.0, 12.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    if not result.success:
        raise NumericError(f"Separatrix minimisation failed for {statistic.value}: {result.message}")
    return SeparatrixFit(alpha=float(result.x), beta=float(-result.fun), statistic=statistic)


def best_bound_at(statistic, zeta_tot: float) -> float:
    """Smallest value of the statistic reachable at total phase count zeta_tot with any real n."""
    if zeta_tot < 0:
        raise DomainError(f"Total phase count must be nonnegative, got {zeta_tot!r}")
    return math.exp(-separatrix_fit_for(statistic).beta * zeta_tot)


def min_time_for_mean_suppression(target: float) -> TimeRatio:
    """Total time in units of T0 below which no iteration count reaches the target mean."""
    if not 0.0 < target < 1.0:
        raise DomainError(f"Target suppression must lie in (0, 1), got {target!r}")
    return -math.log(target) / solve_separatrix().beta


def sample_schedule(n: int, dist: HalfNormalTimeDistribution, stream: RngStream) -> Schedule:
    """n half-normal iteration times drawn from the given stream."""
    n = _require_n(n)
    times = dist.draw(stream.generator(), n)
    # a draw of exactly zero has probability zero; keep the schedule valid regardless
    times = np.where(times > 0, times, np.finfo(float).tiny)
    return Schedule(tuple(times))


def _block_log_suppression(zeta: float, n: int, seed: int, block: int, count: int) -> np.ndarray:
    times = HalfNormalTimeDistribution(1.0).draw(RngStream(seed, block).generator(), (count, n))
    with np.errstate(divide="ignore"):
        return np.sum(np.log(cos2pi(zeta * times)), axis=1)


def monte_carlo_log_suppression(
    zeta: float,
    n: int,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    progress: bool = False,
    block_size: int = TRIALS_PER_BLOCK,
) -> np.ndarray:
    """
    log s for `trials` random schedules at per-iteration phase count zeta.

    Trial i always comes from stream (seed, i // block_size), so the result
    does not depend on `workers`.
    """
    n = _require_n(n)
    if trials < 1:
        raise UsageError(f"Trials must be positive, got {trials!r}")
    zeta = float(_require_zeta(zeta))
    blocks = list(trial_blocks(trials, block_size))

    def run(item):
        block, _, count = item
        return _block_log_suppression(zeta, n, seed, block, count)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(tqdm(pool.map(run, blocks), total=len(blocks), disable=not progress))
    else:
        parts = [run(item) for item in tqdm(blocks, disable=not progress)]
    return np.concatenate(parts)


def monte_carlo_statistics(
    zeta: float,
    n: int,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    progress: bool = False,
    block_size: int = TRIALS_PER_BLOCK,
) -> MonteCarloStatistics:
    """Empirical mean, geometric mean, RMS and median of the suppression over sampled schedules."""
    logs = monte_carlo_log_suppression(
        zeta, n, trials, seed=seed, workers=workers, progress=progress, block_size=block_size,
    )
    values = np.exp(logs)
    squares = np.square(values)
    ddof = 1 if trials > 1 else 0

    mean = float(np.mean(values))
    rms = math.sqrt(float(np.mean(squares)))
    with np.errstate(invalid="ignore"):
        log_mean = float(np.mean(logs))
        stderr_log = float(np.std(logs, ddof=ddof) / math.sqrt(trials)) if np.isfinite(log_mean) else math.inf
    stderr_mean = float(np.std(values, ddof=ddof) / math.sqrt(trials))
    stderr_rms = float(np.std(squares, ddof=ddof) / math.sqrt(trials)) / (2.0 * rms) if rms > 0 else 0.0
    sigma_over_mean = float(np.std(values) / mean) if mean > 0 else 0.0

    logger.info(
        "Monte Carlo zeta=%g n=%d trials=%d seed=%d: mean=%.6g +- %.2g",
        zeta, n, trials, seed, mean, stderr_mean,
    )
    stats = EnsembleStatistics(
        arithmetic_mean=mean,
        geometric_mean=math.exp(log_mean) if np.isfinite(log_mean) else 0.0,
        rms=rms,
        sigma_over_mean=sigma_over_mean,
        n=int(n),
        zeta=float(zeta),
    )
    return MonteCarloStatistics(
        statistics=stats,
        median=float(np.exp(np.median(logs))),
        stderr_mean=stderr_mean,
        stderr_rms=stderr_rms,
        stderr_log_mean=stderr_log,
        trials=int(trials),
        seed=int(seed),
    )


def closed_form_statistics(zeta: float, n: int) -> EnsembleStatistics:
    zeta = float(zeta)
    return EnsembleStatistics(
        arithmetic_mean=rra_mean_per_iteration(zeta, n),
        geometric_mean=rra_geometric_mean(zeta, n) if zeta > 0 else 1.0,
        rms=rra_rms(zeta, n),
        sigma_over_mean=rra_sigma_over_mean(zeta, n),
        n=int(n),
        zeta=zeta,
    )


def single_run_trace(
    schedule: Schedule,
    zeta_grid,
    threshold: Optional[float] = None,
) -> SingleRunTrace:
    """
    Suppression of one sampled schedule across a phase-count grid, the
    fraction of grid points below `threshold` (4^{-n} by default) and the
    window average.
    """
    zeta = _require_zeta(zeta_grid)
    if zeta.ndim != 1 or zeta.size == 0:
        raise UsageError("The phase-count grid must be a nonempty 1-d sequence")
    if threshold is None:
        threshold = 4.0 ** (-len(schedule))
    values = np.asarray(schedule_suppression(schedule, zeta))
    return SingleRunTrace(
        zeta=zeta,
        suppression=values,
        fraction_below=float(np.mean(values < threshold)),
        window_average=float(np.mean(values)),
        threshold=float(threshold),
    )
