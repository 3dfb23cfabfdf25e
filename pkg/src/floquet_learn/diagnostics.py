"""Trotter-error and quantum-chaos diagnostics.

* simulation accuracy ``Q_E(n tau)`` and its running temporal average,
* adjacent eigenphase spacing ratio ``r`` (Poisson ~ 0.386, CUE ~ 0.5996),
* participation ratio of Floquet eigenvectors in the target eigenbasis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.linalg

from .errors import DegenerateNormalization, EigSolverFailure, TooFewPhases
from .kicked_top import TrotterStep, iterate_evolution
from .spin_algebra import SpinMatrix, StateVector, check_hermitian

DEGENERATE_GAP = 1e-12
R_POISSON = 2 * math.log(2) - 1
R_CUE = 0.5996


@dataclass(frozen=True, eq=False)
class EigenphaseSpectrum:
    """Eigenphases in ``(-pi, pi]`` sorted ascending; eigenvectors as columns."""

    phases: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.phases)


@dataclass(frozen=True, eq=False)
class AccuracyTrace:
    tau: float
    q_values: np.ndarray
    running_mean: np.ndarray

    @property
    def final_mean(self) -> float:
        return float(self.running_mean[-1])


def _fix_vector_phases(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(pivots) / pivots)


def eigenphases(step: Union[TrotterStep, np.ndarray]) -> EigenphaseSpectrum:
    """Diagonalise a unitary through its complex Schur form.

    For a normal matrix the Schur form is diagonal, so the Schur vectors are
    an orthonormal eigenbasis even inside degenerate eigenspaces.
    """
    U = step.U if isinstance(step, TrotterStep) else np.asarray(step)
    try:
        T, Z = scipy.linalg.schur(U, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigSolverFailure(f"Schur decomposition failed: {exc}") from exc
    phases = np.angle(np.diag(T))
    # np.angle maps onto [-pi, pi]; fold -pi onto +pi
    phases = np.where(phases <= -np.pi, phases + 2 * np.pi, phases)
    order = np.argsort(phases, kind="stable")
    return EigenphaseSpectrum(phases[order], _fix_vector_phases(Z[:, order]))


def circular_gaps(phases) -> np.ndarray:
    """Gaps between consecutive sorted phases including the wrap-around gap."""
    th = np.sort(np.asarray(phases, dtype=float))
    return np.diff(np.append(th, th[0] + 2 * np.pi))


def spacing_ratio(spec: Union[EigenphaseSpectrum, np.ndarray]) -> float:
    """Mean adjacent gap ratio ``<min(d_n, d_n+1) / max(d_n, d_n+1)>`` on the circle.

    Gaps below ``1e-12`` (exact degeneracies) are merged away first.
    """
    phases = spec.phases if isinstance(spec, EigenphaseSpectrum) else np.asarray(spec, dtype=float)
    if phases.size < 3:
        raise TooFewPhases(f"need at least 3 eigenphases, got {phases.size}")
    gaps = circular_gaps(phases)
    gaps = gaps[gaps > DEGENERATE_GAP]
    if gaps.size < 3:
        raise TooFewPhases(f"only {gaps.size} distinct eigenphases after merging degeneracies")
    nxt = np.roll(gaps, -1)
    return float(np.mean(np.minimum(gaps, nxt) / np.maximum(gaps, nxt)))


def overlap_matrix(spec: EigenphaseSpectrum, H_target: SpinMatrix) -> np.ndarray:
    """``|<psi_n|phi_m>|^2`` with ``psi_n`` the eigenvectors of `H_target`."""
    check_hermitian(H_target)
    try:
        _, psi = np.linalg.eigh(H_target)
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure(str(exc)) from exc
    return np.abs(psi.conj().T @ spec.eigenvectors) ** 2


def participation_ratio(spec: EigenphaseSpectrum, H_target: SpinMatrix) -> float:
    """``(sum_{n,m} |<psi_n|phi_m>|^4)^-1``; ``1/D`` for a shared eigenbasis, ~1/2 for CUE."""
    return float(1.0 / np.sum(overlap_matrix(spec, H_target) ** 2))


def simulation_accuracy(
    step: TrotterStep, H_target: SpinMatrix, psi0: StateVector, n_t: int
) -> AccuracyTrace:
    """``Q_E(n tau) = (E(n tau) - E_0) / (E_inf - E_0)`` for ``n = 1..n_t``."""
    if n_t < 1:
        raise ValueError(f"n_t must be at least 1, got {n_t}")
    check_hermitian(H_target)
    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    E0 = np.vdot(psi0, H_target @ psi0).real
    E_inf = np.trace(H_target).real / H_target.shape[0]
    scale = np.linalg.norm(H_target, 2)
    if abs(E_inf - E0) < 1e-9 * scale:
        raise DegenerateNormalization(
            f"initial energy {E0:.6g} equals the infinite-temperature energy {E_inf:.6g}"
        )
    q = np.empty(n_t)
    for i, psi in enumerate(iterate_evolution(step, psi0, n_t)):
        E = np.vdot(psi, H_target @ psi).real / np.vdot(psi, psi).real
        q[i] = (E - E0) / (E_inf - E0)
    running = np.cumsum(q) / np.arange(1, n_t + 1)
    return AccuracyTrace(step.tau, q, running)


def n_steps_floor(total_time: float, tau: float) -> int:
    """``floor(t / tau)`` guarded against round-off just below an integer."""
    return max(1, int(math.floor(total_time / tau + 1e-9)))


def fit_accuracy_series(taus, qbar) -> tuple[float, float]:
    """Least-squares fit ``Qbar = q1 tau + q2 tau^2`` (no constant term)."""
    taus = np.asarray(taus, dtype=float)
    A = np.column_stack([taus, taus**2])
    (q1, q2), *_ = np.linalg.lstsq(A, np.asarray(qbar, dtype=float), rcond=None)
    return float(q1), float(q2)
