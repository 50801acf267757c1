"""Cross-module oracle checks and golden-table comparisons behind `verify`."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from rodeo_schedules.bounds import PartialSpectralInfo, monotone_envelope, partial_info_bound
from rodeo_schedules.config.config_loader import ConfigLoader, ConfigurationError
from rodeo_schedules.core import DiscreteSpectrum, Schedule, success_probability
from rodeo_schedules.qsim import apply_iteration, apply_iteration_direct, random_state, verify_reduced_density
from rodeo_schedules.rra import geometric_log_rate, geometric_log_rate_series, separatrix_fit_for, solve_separatrix
from rodeo_schedules.superiter import (
    first_side_peak,
    max_valid_energy,
    super_profile,
    super_suppression,
    truncated_super_product,
    truncated_super_suppression,
)
from rodeo_schedules.templates import records
from rodeo_schedules.utils.rng import RngStream
from rodeo_schedules.wam import POINTS_PER_UNIT, REFINE_CANDIDATES, find_worst_peak, wam_optimize, wam_table

logger = logging.getLogger(__name__)

GROUPS = ("qsim", "super", "rra", "wam", "bounds")
QSIM_STATES = 100
AMPLITUDE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str


def spectrum_of(state) -> DiscreteSpectrum:
    """Discrete spectrum carried by a PhysicalState, with the gap lowered to its smallest excitation."""
    probabilities = state.probabilities
    excited = tuple(zip(state.energies[1:].tolist(), probabilities[1:].tolist()))
    gap = min((x for x, _ in excited), default=1.0)
    # renormalize so the weights sum to 1 exactly in floating point
    total = math.fsum(probabilities)
    return DiscreteSpectrum(
        ground_weight=float(probabilities[0] / total),
        excited=tuple((x, w / total) for x, w in excited),
        gap=gap,
    )


def aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest componentwise difference after removing the relative global phase."""
    overlap = np.vdot(a, b)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a * phase - b)))


class VerificationSuite:
    def __init__(
        self,
        seed: int = 0,
        golden_path: Optional[Path] = None,
        points_per_unit: int = POINTS_PER_UNIT,
        refine_candidates: int = REFINE_CANDIDATES,
        envelope_x_max: float = 64.0,
        q_tolerance: float = 0.05,
    ):
        self.seed = seed
        self.golden_path = Path(golden_path) if golden_path else ConfigLoader().golden_path
        self.points_per_unit = points_per_unit
        self.refine_candidates = refine_candidates
        self.envelope_x_max = envelope_x_max
        self.q_tolerance = q_tolerance
        self.results: List[CheckResult] = []
        self._wam_rows = None

    def _record(self, group: str, name: str, passed: bool, detail: str) -> None:
        result = CheckResult(group, name, bool(passed), detail)
        self.results.append(result)
        logger.info(records.get_check_line(f"{group}.{name}", result.passed, detail))

    def load_golden(self) -> dict:
        """Load the golden optimized-schedule rows."""
        try:
            with open(self.golden_path, 'r') as f:
                golden = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Golden file not found: {self.golden_path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Error parsing golden file: {e}")
        if 'rows' not in golden:
            raise ConfigurationError("Golden file has no 'rows'")
        return golden

    def wam_rows(self):
        if self._wam_rows is None:
            state = wam_optimize(8, points_per_unit=self.points_per_unit, candidates=self.refine_candidates)
            self._wam_rows = wam_table(state)
        return self._wam_rows

    def check_qsim(self) -> None:
        worst_probability = 0.0
        worst_amplitude = 0.0
        worst_density = 0.0
        worst_direct = 0.0
        for i in range(QSIM_STATES):
            stream = RngStream(self.seed, i)
            generator = stream.child(QSIM_STATES + i).generator()
            dim = int(generator.integers(2, 9))
            state = random_state(dim, stream)
            times = generator.uniform(0.05, 2.0, int(generator.integers(1, 7)))

            current = state
            for tau in times:
                outcome = apply_iteration(current, tau)
                expected = success_probability(spectrum_of(current), Schedule((tau,)))
                worst_probability = max(worst_probability, abs(outcome.success_probability - expected))
                if outcome.post_success is None:
                    break

                weights = 0.5 * (1.0 + np.exp(-2j * np.pi * np.mod(current.energies * tau, 1.0)))
                closed = current.amplitudes * weights
                closed = closed / np.linalg.norm(closed)
                worst_amplitude = max(worst_amplitude, aligned_distance(closed, outcome.post_success.amplitudes))

                direct = apply_iteration_direct(current, tau)
                worst_direct = max(worst_direct, float(np.max(np.abs(direct.composite.amplitudes - outcome.composite.amplitudes))))
                worst_density = max(worst_density, verify_reduced_density(current, tau))
                current = outcome.post_success

        self._record("qsim", "success_probability", worst_probability <= AMPLITUDE_TOLERANCE, f"max deviation {worst_probability:.3g}")
        self._record("qsim", "post_selected_amplitudes", worst_amplitude <= AMPLITUDE_TOLERANCE, f"max deviation {worst_amplitude:.3g}")
        self._record("qsim", "direct_equivalence", worst_direct <= AMPLITUDE_TOLERANCE, f"max deviation {worst_direct:.3g}")
        self._record("qsim", "reduced_density", worst_density <= AMPLITUDE_TOLERANCE, f"max residual {worst_density:.3g}")

    def check_super(self) -> None:
        x, value = find_worst_peak(super_profile((1.0,)), 1.0, 50.0, self.points_per_unit, self.refine_candidates)
        self._record(
            "super", "first_side_peak",
            abs(value - 4.719e-2) <= 1e-4 and abs(x - 1.43029) <= 1e-3 and abs(x - first_side_peak()) <= 1e-6,
            f"peak {value:.6g} at x={x:.6f}",
        )

        generator = RngStream(self.seed, 0).child(7).generator()
        zeta = generator.uniform(0.0, 1e3, 1000)
        depth = generator.integers(8, 41, 1000)
        deviation = max(
            abs(float(truncated_super_suppression(z, int(d))) - float(truncated_super_product(z, int(d))))
            for z, d in zip(zeta, depth)
        )
        self._record("super", "ratio_form", deviation <= 1e-10, f"max deviation {deviation:.3g}")

        emax = max_valid_energy(15)
        self._record("super", "max_valid_energy", 40308.0 <= emax <= 40309.0, f"E_max(15) = {emax:.4f}")
        self._record("super", "zero_phase", super_suppression(0.0) == 1.0, "j0^2(0) = 1")

    def check_rra(self) -> None:
        fit = solve_separatrix()
        self._record(
            "rra", "separatrix",
            abs(fit.alpha - 4.271) <= 1e-3 and abs(fit.beta - 2.244) <= 1e-3,
            f"alpha={fit.alpha:.6f} beta={fit.beta:.6f}",
        )
        rms = separatrix_fit_for("rms")
        self._record("rra", "rms_fit", abs(rms.beta - 1.637) <= 1e-3, f"beta={rms.beta:.6f}")

        deviation = max(abs(geometric_log_rate(z) - geometric_log_rate_series(z)) for z in (0.1, 0.25, 0.5, 1.0, 3.0))
        self._record("rra", "geometric_quadrature", deviation <= 1e-8, f"max deviation {deviation:.3g}")

    def check_wam(self) -> None:
        golden = self.load_golden()
        rows = self.wam_rows()
        time_tol = golden.get('time_tolerance', 2e-3)
        total_tol = golden.get('total_tolerance', 5e-3)
        q_tol = golden.get('q_relative_tolerance', self.q_tolerance)
        for expected in golden['rows']:
            n = expected['n']
            if n > len(rows):
                self._record("wam", f"row_{n}", False, "row not produced")
                continue
            row = rows[n - 1]
            times_ok = len(row.times) == len(expected['times']) and all(
                abs(a - b) <= time_tol for a, b in zip(row.times, expected['times'])
            )
            total_ok = abs(row.total_time - expected['total_time']) <= total_tol
            q_ok = abs(row.q - expected['Q']) <= q_tol * expected['Q']
            self._record(
                "wam", f"row_{n}", times_ok and total_ok and q_ok,
                f"Q={row.q:.4g} (golden {expected['Q']:.4g}) total={row.total_time:.4f} (golden {expected['total_time']:.4f})",
            )

    def check_bounds(self) -> None:
        row = self.wam_rows()[2]
        envelope = monotone_envelope(super_profile(row.times), 1.0, self.envelope_x_max, self.points_per_unit)
        for f, x0, expected in ((0.99, 3.0, 5.591e-7), (0.9999, 8.0, 1.194e-8)):
            bound = partial_info_bound(envelope, PartialSpectralInfo(f, x0))
            self._record(
                "bounds", f"partial_info_f{f}_x{x0:g}",
                abs(bound - expected) <= 0.02 * expected,
                f"bound {bound:.4g} (expected {expected:.4g})",
            )

    def run(self, only: Optional[str] = None) -> List[CheckResult]:
        checks = {
            "qsim": self.check_qsim,
            "super": self.check_super,
            "rra": self.check_rra,
            "wam": self.check_wam,
            "bounds": self.check_bounds,
        }
        for group in GROUPS:
            if only is None or only == group:
                checks[group]()
        return self.results

    def report(self) -> str:
        lines = [records.get_check_line(f"{r.group}.{r.name}", r.passed, r.detail) for r in self.results]
        lines.append(records.get_summary_line(self.results))
        return "\n".join(lines) + "\n"

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)
