"""Statevector model of rodeo iterations with one ancilla qubit.

The Hamiltonian is diagonal in the working basis, so controlled evolution
for time tau multiplies the component at energy ratio x by exp(-2 pi i x tau).
Composite vectors are stored ancilla-major as a (2, dim) array: row 0 is the
ancilla-up block, row 1 the ancilla-down block.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from rodeo_schedules.core import Schedule, TimeRatio
from rodeo_schedules.exceptions import DegenerateBranchError, DomainError, UsageError
from rodeo_schedules.utils.rng import TRIALS_PER_BLOCK, RngStream, trial_blocks

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
BRANCH_TOLERANCE = 1e-14
MAX_STATEVECTOR_DIM = 1 << 14
MAX_DENSITY_DIM = 64

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
# projector onto the x-basis up state and its complement
_P_PLUS = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]])
_P_MINUS = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])


@dataclass(frozen=True, eq=False)
class PhysicalState:
    amplitudes: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        energies = np.asarray(self.energies, dtype=float).ravel()
        if amplitudes.size == 0 or amplitudes.shape != energies.shape:
            raise UsageError("Amplitudes and energies must be nonempty and of equal length")
        if amplitudes.size > MAX_STATEVECTOR_DIM:
            raise UsageError(f"State dimension {amplitudes.size} exceeds {MAX_STATEVECTOR_DIM}")
        if energies[0] != 0.0 or np.any(np.diff(energies) < 0) or not np.all(np.isfinite(energies)):
            raise DomainError("Energies must be finite, sorted and start with the ground state at 0")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"State norm must be 1 within {NORM_TOLERANCE}, got {norm!r}")
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "energies", energies)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def ground_probability(self) -> float:
        return float(abs(self.amplitudes[0]) ** 2)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def from_unnormalized(cls, amplitudes, energies) -> "PhysicalState":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amplitudes)
        if norm == 0:
            raise DegenerateBranchError("Cannot normalize a zero vector")
        return cls(amplitudes / norm, energies)


@dataclass(frozen=True, eq=False)
class CompositeState:
    """Ancilla plus physical system; `amplitudes` has shape (2, dim)."""
    amplitudes: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 2 or amplitudes.shape[0] != 2:
            raise UsageError("Composite amplitudes must have shape (2, dim)")
        norm = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"Composite norm must be 1 within {NORM_TOLERANCE}, got {norm!r}")
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def ancilla_up(cls, state: PhysicalState) -> "CompositeState":
        amplitudes = np.zeros((2, state.dim), dtype=complex)
        amplitudes[0] = state.amplitudes
        return cls(amplitudes, state.energies)

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True, eq=False)
class IterationOutcome:
    success_probability: float
    post_success: Optional[PhysicalState]
    post_failure: Optional[PhysicalState]
    composite: CompositeState

    @property
    def failure_probability(self) -> float:
        return 1.0 - self.success_probability


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    success: bool
    final_state: PhysicalState
    record: Tuple[bool, ...]


def _phases(state_energies: np.ndarray, tau: TimeRatio) -> np.ndarray:
    if not math.isfinite(tau) or tau <= 0:
        raise DomainError(f"Iteration time must be positive, got {tau!r}")
    # exp(-2 pi i x tau) with the argument reduced mod 1 first
    turns = np.mod(state_energies * tau, 1.0)
    return np.exp(-2j * np.pi * turns)


def _outcome(composite: np.ndarray, energies: np.ndarray) -> IterationOutcome:
    up, down = composite[0], composite[1]
    p_success = float(np.vdot(up, up).real)
    p_failure = float(np.vdot(down, down).real)
    success = PhysicalState.from_unnormalized(up, energies) if p_success >= BRANCH_TOLERANCE else None
    failure = PhysicalState.from_unnormalized(down, energies) if p_failure >= BRANCH_TOLERANCE else None
    return IterationOutcome(
        success_probability=min(max(p_success, 0.0), 1.0),
        post_success=success,
        post_failure=failure,
        composite=CompositeState(composite, energies),
    )


def apply_iteration(state: PhysicalState, tau: TimeRatio) -> IterationOutcome:
    """Hadamard, controlled evolution on the ancilla-up branch, Hadamard."""
    composite = CompositeState.ancilla_up(state).amplitudes
    composite = _HADAMARD @ composite
    composite[0] = composite[0] * _phases(state.energies, tau)
    composite = _HADAMARD @ composite
    return _outcome(composite, state.energies)


def apply_iteration_direct(state: PhysicalState, tau: TimeRatio) -> IterationOutcome:
    """
    The same iteration written as exp(-i P_+ (x) H tau) acting on the
    ancilla-up state, i.e. P_- (x) 1 + P_+ (x) exp(-i H tau).
    """
    composite = CompositeState.ancilla_up(state).amplitudes
    blocks = _P_MINUS[None, :, :] + _P_PLUS[None, :, :] * _phases(state.energies, tau)[:, None, None]
    composite = np.einsum("cab,bc->ac", blocks, composite)
    return _outcome(composite, state.energies)


def verify_reduced_density(state: PhysicalState, tau: TimeRatio) -> float:
    """
    Largest of two residuals after one iteration: the Frobenius distance
    between the ancilla-traced density matrix and P_s rho_s + P_u rho_u, and
    the drift of the ground-state diagonal entry from |alpha_g|^2.
    """
    if state.dim > MAX_DENSITY_DIM:
        raise UsageError(f"Density checks are limited to dimension {MAX_DENSITY_DIM}")
    outcome = apply_iteration(state, tau)
    vector = outcome.composite.vector
    rho = np.outer(vector, vector.conj())
    dim = state.dim
    reduced = rho[:dim, :dim] + rho[dim:, dim:]

    mixture = np.zeros((dim, dim), dtype=complex)
    for probability, branch in (
        (outcome.success_probability, outcome.post_success),
        (outcome.failure_probability, outcome.post_failure),
    ):
        if branch is not None:
            mixture += probability * np.outer(branch.amplitudes, branch.amplitudes.conj())

    residual = float(np.linalg.norm(reduced - mixture))
    ground_drift = abs(float(reduced[0, 0].real) - state.ground_probability)
    return max(residual, ground_drift)


def run_trajectory(state: PhysicalState, schedule: Schedule, stream: RngStream) -> TrajectoryResult:
    """Apply iterations in order, sampling each ancilla measurement; stop at the first failure."""
    draws = stream.generator().random(len(schedule))
    record = []
    current = state
    for tau, u in zip(schedule.times, draws):
        outcome = apply_iteration(current, tau)
        succeeded = bool(u < outcome.success_probability)
        record.append(succeeded)
        branch = outcome.post_success if succeeded else outcome.post_failure
        if branch is None:
            raise DegenerateBranchError(f"Sampled a zero-probability outcome at iteration {len(record)}")
        if not succeeded:
            return TrajectoryResult(False, branch, tuple(record))
        current = branch
    return TrajectoryResult(True, current, tuple(record))


def conditional_success_probabilities(state: PhysicalState, schedule: Schedule) -> np.ndarray:
    """Success probability of each iteration given that all earlier ones succeeded."""
    probabilities = []
    current = state
    for tau in schedule.times:
        outcome = apply_iteration(current, tau)
        probabilities.append(outcome.success_probability)
        if outcome.post_success is None:
            probabilities.extend([0.0] * (len(schedule) - len(probabilities)))
            break
        current = outcome.post_success
    return np.asarray(probabilities)


def trajectory_success_rate(
    state: PhysicalState,
    schedule: Schedule,
    trials: int,
    seed: int = 0,
    block_size: int = TRIALS_PER_BLOCK,
) -> Tuple[float, float]:
    """
    Empirical all-success rate and its standard error over `trials` sampled
    trajectories. Trial i measures with row i % block_size of stream
    (seed, i // block_size).
    """
    if trials < 1:
        raise UsageError(f"Trials must be positive, got {trials!r}")
    thresholds = conditional_success_probabilities(state, schedule)
    successes = 0
    for block, _, count in trial_blocks(trials, block_size):
        draws = RngStream(seed, block).generator().random((count, len(schedule)))
        successes += int(np.count_nonzero(np.all(draws < thresholds, axis=1)))
    rate = successes / trials
    stderr = math.sqrt(max(rate * (1.0 - rate), 0.0) / trials)
    logger.info("Simulated %d trajectories: success rate %.6f +- %.2g", trials, rate, stderr)
    return rate, stderr


def suppression_via_simulation(state: PhysicalState, schedule: Schedule, component: int) -> float:
    """
    (|a'_c|/|a'_g|)^2 / (|a_c|/|a_g|)^2 after the all-success branch of the
    whole schedule.
    """
    if not 0 < component < state.dim:
        raise UsageError(f"Component {component} is not an excited component")
    if state.amplitudes[0] == 0:
        raise DomainError("Ground amplitude must be nonzero")
    if state.amplitudes[component] == 0:
        raise DomainError(f"Component {component} carries no amplitude")

    current = state
    for tau in schedule.times:
        outcome = apply_iteration(current, tau)
        if outcome.post_success is None:
            raise DegenerateBranchError("All-success branch has zero norm")
        current = outcome.post_success

    before = abs(state.amplitudes[component]) ** 2 / abs(state.amplitudes[0]) ** 2
    after = abs(current.amplitudes[component]) ** 2 / abs(current.amplitudes[0]) ** 2
    return float(after / before)


def random_state(dim: int, stream: RngStream, x_max: float = 10.0) -> PhysicalState:
    """Ground state at 0 plus dim - 1 sorted energies uniform in [1, x_max], random complex amplitudes."""
    if dim < 1:
        raise UsageError(f"Dimension must be positive, got {dim!r}")
    generator = stream.generator()
    energies = np.concatenate(([0.0], np.sort(generator.uniform(1.0, x_max, dim - 1))))
    amplitudes = generator.standard_normal(dim) + 1j * generator.standard_normal(dim)
    return PhysicalState.from_unnormalized(amplitudes, energies)
