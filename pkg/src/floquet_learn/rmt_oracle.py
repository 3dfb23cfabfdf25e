"""Random-matrix estimate of the learning residual ``lambda_1``.

When the Trotter step is replaced by a CUE unitary, the ensemble average of
``Q = M^dagger M / N_con`` follows from second-moment Haar (Weingarten)
integrals.  Averaging further over uniformly distributed coherent initial
states gives the matrix ``Qbar``; the estimate is ``sqrt(lowest eigenvalue)``.
``M^dagger`` is the conjugate transpose, so ``Qbar`` is hermitian PSD for
non-hermitian ansatz operators as well.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import QuadratureOrderTooLow
from .learning import _constraint_entries, sample_angles
from .magnus import ANSATZ_LABELS, AnsatzSet
from .spin_algebra import SpinSize, coherent_states, expectations, parse_label


class QSource(str, enum.Enum):
    ANALYTIC_A0 = "analytic-a0"
    QUADRATURE_ISE = "quadrature-ise"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True, eq=False)
class QMatrix:
    entries: np.ndarray
    labels: tuple[str, ...]
    spin: SpinSize
    source: QSource
    stderr: Optional[np.ndarray] = field(default=None, repr=False)

    def entry(self, a: str, b: str) -> complex:
        return complex(self.entries[self.labels.index(a), self.labels.index(b)])


def q_cue_element(
    rho_j: complex,
    rho_k: complex,
    h_j: np.ndarray,
    h_k: np.ndarray,
    dim: Optional[int] = None,
    purity: float = 1.0,
) -> complex:
    """CUE average ``E_U[conj(M_j) M_k]`` for a single initial state ``rho``.

    ``rho_j = tr(rho h_j)`` and ``rho_k = tr(rho h_k)``; ``purity`` is
    ``tr(rho^2)`` (1 for pure states).  For hermitian operators this is the
    familiar seven-term expression in ``tr(rho h)``, ``tr(h)``, ``tr(h_j h_k)``.
    """
    D = h_j.shape[0] if dim is None else dim
    t_j = np.trace(h_j).conjugate()
    t_k = np.trace(h_k)
    t_jk = np.vdot(h_j, h_k)  # tr(h_j^dagger h_k)
    a_j = np.conjugate(rho_j)
    a_k = rho_k
    value = (
        a_j * a_k
        - t_j / D * a_k
        - t_k / D * a_j
        + t_j * t_k / (D**2 - 1)
        + purity * t_jk / (D**2 - 1)
        - t_jk / (D * (D**2 - 1))
        - purity * t_j * t_k / (D * (D**2 - 1))
    )
    return complex(value)


def _q_from_moments(ansatz: AnsatzSet, first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Average of ``q_cue_element`` given ensemble moments of ``a_j = tr(rho h_j)``.

    ``first[j] = E[a_j]`` and ``second[j, k] = E[conj(a_j) a_k]``.
    """
    ops = np.stack(ansatz.operators)
    D = ops.shape[1]
    tr = np.trace(ops, axis1=1, axis2=2)
    flat = ops.reshape(len(ops), -1)
    t_jk = flat.conj() @ flat.T
    tt = np.outer(tr.conj(), tr)
    Q = (
        second
        - np.outer(tr.conj(), first) / D
        - np.outer(first.conj(), tr) / D
        + tt / (D**2 - 1)
        + t_jk / (D**2 - 1)
        - t_jk / (D * (D**2 - 1))
        - tt / (D * (D**2 - 1))
    )
    return (Q + Q.conj().T) / 2


def _polynomial_degree(ansatz: AnsatzSet) -> int:
    return max(sum(p for _, p in parse_label(lab)) for lab in ansatz.labels)


def sphere_quadrature(n_theta: int, n_phi: int):
    """Gauss-Legendre in ``cos(theta)`` times a uniform ``phi`` rule; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(x)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w / 2, np.full(n_phi, 1.0 / n_phi))
    return T.ravel(), P.ravel(), W.ravel()


def _ise_moments(ansatz: AnsatzSet, n_theta: int, n_phi: int):
    theta, phi, weights = sphere_quadrature(n_theta, n_phi)
    states = coherent_states(ansatz.spin, theta, phi)
    a = np.stack([expectations(h, states) for h in ansatz.operators], axis=1)
    first = weights @ a
    second = (a.conj().T * weights) @ a
    return first, second


def ise_average_Q(ansatz: AnsatzSet, s: Optional[SpinSize] = None, rel_tol: float = 1e-8) -> QMatrix:
    """``Qbar_jk = E_{coherent states}[q_cue_element]`` by exact spherical quadrature.

    A degree-``p`` spin product has a coherent-state expectation that is a
    polynomial of degree ``p`` in the Bloch vector, so the products entering
    ``Qbar`` have degree ``<= 2p``.  ``p + 2`` Legendre nodes and ``2p + 3``
    azimuthal points integrate those exactly with one node to spare; the
    order is then doubled once as a check.
    """
    s = ansatz.spin if s is None else s
    if s != ansatz.spin:
        raise ValueError(f"ansatz was built for {ansatz.spin}, not {s}")
    p = _polynomial_degree(ansatz)
    n_theta, n_phi = p + 2, 2 * p + 3
    Q1 = _q_from_moments(ansatz, *_ise_moments(ansatz, n_theta, n_phi))
    Q2 = _q_from_moments(ansatz, *_ise_moments(ansatz, 2 * n_theta, 2 * n_phi))
    scale = np.sqrt(np.outer(np.abs(np.diag(Q2)), np.abs(np.diag(Q2))))
    shift = np.max(np.abs(Q1 - Q2) / np.where(scale > 0, scale, 1.0))
    if shift > rel_tol:
        raise QuadratureOrderTooLow(f"doubling the quadrature order moved Qbar by {shift:.2e} (relative)")
    return QMatrix(Q2, ansatz.labels, s, QSource.QUADRATURE_ISE)


def analytic_q_a0(s: SpinSize) -> QMatrix:
    """Closed-form ``Qbar`` for ``A_0 = {Sx^2, Sx, Sy, Sz^2, Sz}``."""
    S = s.s
    quad = S * (8 * S**3 - 4 * S**2 + 6 * S - 3) / 90
    lin = S * (2 * S + 1) / 6
    Q = np.diag([quad, lin, lin, quad, lin]).astype(complex)
    Q[0, 3] = Q[3, 0] = -quad / 2
    return QMatrix(Q, ANSATZ_LABELS[0], s, QSource.ANALYTIC_A0)


def lambda_rmt(q: QMatrix) -> float:
    """``sqrt`` of the lowest eigenvalue of ``Qbar`` (clamped at zero)."""
    entries = q.entries if isinstance(q, QMatrix) else np.asarray(q)
    eps1 = np.linalg.eigvalsh((entries + entries.conj().T) / 2)[0]
    return math.sqrt(max(float(eps1), 0.0))


def sample_haar_unitary(dim: int, seed) -> np.ndarray:
    """Haar-random (CUE) unitary from the QR decomposition of a complex Ginibre matrix."""
    if dim < 2:
        raise ValueError(f"dimension must be at least 2, got {dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def _mc_sample(ansatz: AnsatzSet, n_con: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    U = sample_haar_unitary(ansatz.spin.dim, rng)
    theta, phi = sample_angles(n_con, rng)
    states0 = coherent_states(ansatz.spin, theta, phi)
    return _constraint_entries(states0, states0 @ U.T, ansatz)


def monte_carlo_lambda(
    ansatz: AnsatzSet,
    s: Optional[SpinSize] = None,
    n_con: Optional[int] = None,
    n_samples: int = 50,
    seed: int = 0,
) -> tuple[float, float]:
    """Empirical ``E[sqrt(eps_1(Q))]`` over Haar unitaries and random coherent states.

    Returns ``(mean, standard error)`` of ``sigma_min(M) / sqrt(N_con)``.
    """
    s = ansatz.spin if s is None else s
    n_con = s.dim if n_con is None else n_con
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    seqs = np.random.SeedSequence(seed).spawn(n_samples)
    values = np.array(
        [np.linalg.svd(_mc_sample(ansatz, n_con, q), compute_uv=False)[-1] / math.sqrt(n_con) for q in seqs]
    )
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n_samples))


def monte_carlo_q(
    ansatz: AnsatzSet, n_con: Optional[int] = None, n_samples: int = 200, seed: int = 0
) -> QMatrix:
    """Sample mean of ``Q = M^dagger M / N_con`` with entrywise standard errors."""
    n_con = ansatz.spin.dim if n_con is None else n_con
    seqs = np.random.SeedSequence(seed).spawn(n_samples)
    samples = []
    for q in seqs:
        M = _mc_sample(ansatz, n_con, q)
        samples.append(M.conj().T @ M / n_con)
    samples = np.array(samples)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(n_samples)
    return QMatrix(mean, ansatz.labels, ansatz.spin, QSource.MONTE_CARLO, stderr)
