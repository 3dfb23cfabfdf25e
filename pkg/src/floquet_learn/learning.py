"""Hamiltonian learning from energy conservation.

Given initial states ``psi_i`` and a black-box Trotter step, the constraint
matrix ``M_ij = <psi_i(t)|h_j|psi_i(t)> - <psi_i(0)|h_j|psi_i(0)>`` is built
for ansatz operators ``h_j``.  The coefficient vector minimising
``||M c|| / ||c||`` is the right singular vector of the smallest singular
value; that singular value (divided by ``sqrt(N_con)``) is ``lambda_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, SvdFailure
from .kicked_top import TrotterStep, step_power
from .magnus import AnsatzSet, FMCoefficients
from .spin_algebra import SpinSize, coherent_states, expectations

DEFAULT_TOTAL_TIME = 100.0
KERNEL_TOL = 1e-12


def sample_angles(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points on the sphere: ``cos(theta) ~ U[-1, 1]``, ``phi ~ U[0, 2 pi)``."""
    theta = np.arccos(rng.uniform(-1.0, 1.0, n))
    phi = rng.uniform(0.0, 2 * np.pi, n)
    return theta, phi


def sample_initial_states(
    s: SpinSize, n_con: int, seed: Union[int, np.random.Generator, np.random.SeedSequence]
) -> np.ndarray:
    """`n_con` random coherent states, one per row of the returned array."""
    if n_con < 1:
        raise ValueError(f"n_con must be at least 1, got {n_con}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    theta, phi = sample_angles(n_con, rng)
    return coherent_states(s, theta, phi)


def evolution_steps(total_time: float, tau: float) -> int:
    """``round(total_time / tau)`` with halves rounded up, at least one step."""
    return max(1, int(math.floor(total_time / tau + 0.5)))


@dataclass(frozen=True, eq=False)
class ConstraintMatrix:
    entries: np.ndarray
    ansatz: AnsatzSet = field(repr=False)
    tau: float
    n_steps: int

    @property
    def n_con(self) -> int:
        return self.entries.shape[0]


def _constraint_entries(states0: np.ndarray, states_t: np.ndarray, ansatz: AnsatzSet) -> np.ndarray:
    return np.column_stack(
        [expectations(h, states_t) - expectations(h, states0) for h in ansatz.operators]
    )


def constraint_matrix(
    step: TrotterStep,
    states: Union[np.ndarray, Sequence[np.ndarray]],
    ansatz: AnsatzSet,
    total_time: float = DEFAULT_TOTAL_TIME,
) -> ConstraintMatrix:
    """Constraint matrix after ``n = round(total_time / tau)`` Trotter steps.

    All states share one ``U^n`` obtained by binary powering.
    """
    if not total_time > 0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    states0 = np.atleast_2d(np.asarray(states, dtype=complex))
    if states0.shape[1] != step.dim or ansatz.spin.dim != step.dim:
        raise DimensionMismatch(
            f"states have dimension {states0.shape[1]}, ansatz {ansatz.spin.dim}, step {step.dim}"
        )
    if states0.shape[0] <= len(ansatz):
        raise ValueError(
            f"need more initial states than ansatz operators (N_con={states0.shape[0]}, N_A={len(ansatz)})"
        )
    n = evolution_steps(total_time, step.tau)
    states_t = states0 @ step_power(step, n).T
    states_t /= np.linalg.norm(states_t, axis=1, keepdims=True)
    return ConstraintMatrix(_constraint_entries(states0, states_t, ansatz), ansatz, step.tau, n)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    pivot = v[np.argmax(np.abs(v))]
    return v * (abs(pivot) / pivot) if pivot != 0 else v


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """``lambda1`` is the smallest singular value divided by ``sqrt(N_con)``."""

    lambda1: float
    c_rec: np.ndarray
    singular_values: np.ndarray
    n_con: int
    degenerate_kernel: bool = False
    labels: Optional[tuple[str, ...]] = None

    @property
    def lambda1_raw(self) -> float:
        return self.lambda1 * math.sqrt(self.n_con)


def reconstruct(M: Union[ConstraintMatrix, np.ndarray]) -> ReconstructionResult:
    """SVD reconstruction: ``c_rec`` spans the (approximate) kernel of ``M``."""
    labels = M.ansatz.labels if isinstance(M, ConstraintMatrix) else None
    A = M.entries if isinstance(M, ConstraintMatrix) else np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise SvdFailure("constraint matrix contains non-finite entries")
    try:
        _, sv, Vh = np.linalg.svd(A)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    n_a = A.shape[1]
    if sv.size < n_a:
        sv = np.concatenate([sv, np.zeros(n_a - sv.size)])
    sv_asc = sv[::-1]
    degenerate = n_a > 1 and sv_asc[0] < KERNEL_TOL and sv_asc[1] < KERNEL_TOL
    if degenerate and not np.any(A):
        c = np.zeros(n_a, dtype=complex)
        c[0] = 1.0
    else:
        c = _fix_phase(Vh[-1].conj())
    return ReconstructionResult(
        lambda1=float(sv_asc[0] / math.sqrt(A.shape[0])),
        c_rec=c,
        singular_values=sv_asc,
        n_con=A.shape[0],
        degenerate_kernel=bool(degenerate),
        labels=labels,
    )


def align_phase(reference: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Normalise `v` and rotate its global phase to maximise ``Re <reference, v>``."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    overlap = np.vdot(reference, v)
    return v * np.exp(-1j * np.angle(overlap)) if overlap != 0 else v


def parameter_distance(c_fm: Union[FMCoefficients, np.ndarray], c_rec: np.ndarray) -> float:
    """``|| c_fm - c_rec ||`` for unit vectors after removing the relative phase."""
    a = c_fm.values if isinstance(c_fm, FMCoefficients) else np.asarray(c_fm, dtype=complex)
    b = np.asarray(c_rec, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"coefficient vectors have lengths {a.shape} and {b.shape}")
    a = a / np.linalg.norm(a)
    return float(np.linalg.norm(a - align_phase(a, b)))


def loglog_slope(taus, values) -> float:
    """Slope of the least-squares line through ``(log tau, log value)``."""
    return float(np.polyfit(np.log(np.asarray(taus)), np.log(np.asarray(values)), 1)[0])


@dataclass(frozen=True)
class ThresholdEstimate:
    tau_star: float
    slope: float
    prefactor: float
    plateau: float


def trotter_threshold(
    taus,
    lambdas,
    fit_window: tuple[float, float] = (0.2, 1.5),
    plateau_window: tuple[float, float] = (4.0, 8.0),
) -> ThresholdEstimate:
    """Crossover of a power law fitted below threshold with the plateau level above it."""
    taus = np.asarray(taus, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    pre = (taus >= fit_window[0]) & (taus <= fit_window[1])
    post = (taus >= plateau_window[0]) & (taus <= plateau_window[1])
    if pre.sum() < 2 or post.sum() < 1:
        raise ValueError("not enough tau points inside the fit or plateau window")
    slope, intercept = np.polyfit(np.log(taus[pre]), np.log(lambdas[pre]), 1)
    plateau = float(np.mean(lambdas[post]))
    tau_star = float(np.exp((np.log(plateau) - intercept) / slope))
    return ThresholdEstimate(tau_star, float(slope), float(np.exp(intercept)), plateau)
