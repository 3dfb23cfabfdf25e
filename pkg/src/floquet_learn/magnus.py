"""Floquet-Magnus terms, ansatz operator sets and coefficient projection.

The FM terms are assembled numerically from commutators of the component
Hamiltonians and then expanded in an ansatz basis by solving the
Hilbert-Schmidt Gram system.  Expansion is done modulo the identity: the
identity component of an operator is invisible to the learning protocol
(its expectation value never changes) and the ansatz sets do not contain it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import AnsatzDegenerate, SpanFailure, UnsupportedOrder
from .kicked_top import FloquetVariant, ModelParams, build_hamiltonians
from .spin_algebra import SpinMatrix, SpinSize, operator_product

MAX_ORDER = 2
SPAN_TOL = 1e-8
GRAM_TOL = 1e-8

ANSATZ_LABELS = (
    ("Sx^2", "Sx", "Sy", "Sz^2", "Sz"),
    ("Sx Sy", "Sy Sz", "Sx Sz", "Sx Sy Sz"),
    ("Sx^2 Sy", "Sy Sz^2", "Sx^2 Sz^2", "Sz^4", "Sx^2 Sz", "Sz^3", "Sx Sz^2", "Sx^4", "Sx^3"),
)


def _check_order(k: int) -> int:
    if int(k) != k or not 0 <= k <= MAX_ORDER:
        raise UnsupportedOrder(f"Floquet-Magnus order must be 0, 1 or 2, got {k!r}")
    return int(k)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def magnus_term(
    params: ModelParams,
    s: SpinSize,
    k: int,
    variant: FloquetVariant = FloquetVariant.THREE_STEP,
) -> SpinMatrix:
    """Return the order-`k` Floquet-Magnus term ``C_k`` as a matrix.

    For ``U = e^{-i H_z tau} e^{-i H_y tau} e^{-i H_x tau}``::

        C_0 = sum_a H_a
        C_1 = (i/2) sum_{a<b} [H_a, H_b]                      (x < y < z)
        C_2 = -sum_{a != b} [H_a, [H_a, H_b]] / 12
              - [H_x, [H_y, H_z]] / 6 - [H_z, [H_y, H_x]] / 6

    The two-step variant uses the same expressions with ``H_y = 0``.
    """
    k = _check_order(k)
    H_x, H_y, H_z, _ = build_hamiltonians(params, s)
    if FloquetVariant(variant) is FloquetVariant.TWO_STEP:
        H_y = np.zeros_like(H_y)
    H = {"x": H_x, "y": H_y, "z": H_z}
    if k == 0:
        return H_x + H_y + H_z
    if k == 1:
        return 0.5j * (commutator(H_x, H_y) + commutator(H_x, H_z) + commutator(H_y, H_z))
    out = np.zeros_like(H_x)
    for a in "xyz":
        for b in "xyz":
            if a != b:
                out -= commutator(H[a], commutator(H[a], H[b])) / 12
    out -= commutator(H_x, commutator(H_y, H_z)) / 6
    out -= commutator(H_z, commutator(H_y, H_x)) / 6
    return out


def truncated_floquet_hamiltonian(
    params: ModelParams,
    s: SpinSize,
    k: int,
    tau: float,
    variant: FloquetVariant = FloquetVariant.THREE_STEP,
) -> SpinMatrix:
    """``H_F^(k)(tau) = sum_{j<=k} tau^j C_j``."""
    k = _check_order(k)
    return sum(tau**j * magnus_term(params, s, j, variant) for j in range(k + 1))


def _traceless(A: np.ndarray) -> np.ndarray:
    return A - np.trace(A) / A.shape[0] * np.eye(A.shape[0])


@dataclass(frozen=True, eq=False)
class AnsatzSet:
    """Ordered, labelled operator basis ``{h_j}`` for an order-``k`` truncation."""

    order: int
    labels: tuple[str, ...]
    operators: tuple[np.ndarray, ...] = field(repr=False)
    spin: SpinSize
    gram_condition: float = field(default=float("nan"))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(zip(self.labels, self.operators))

    def gram(self) -> np.ndarray:
        """HS Gram matrix ``tr(h_j^dagger h_l)`` of the traceless parts."""
        B = self._basis()
        return B.conj().T @ B

    def _basis(self) -> np.ndarray:
        return np.stack([_traceless(h).ravel() for h in self.operators], axis=1)

    def combine(self, coefficients) -> np.ndarray:
        """``sum_j c_j h_j``."""
        return np.tensordot(np.asarray(coefficients), np.stack(self.operators), axes=1)


def _normalized_gram(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    G = B.conj().T @ B
    d = np.sqrt(np.diag(G).real)
    return G / np.outer(d, d), d


@lru_cache(maxsize=64)
def _ansatz_cached(two_s: int, k: int) -> AnsatzSet:
    s = SpinSize(two_s)
    labels = tuple(lab for group in ANSATZ_LABELS[: k + 1] for lab in group)
    ops = []
    for lab in labels:
        h = operator_product(s, lab)
        h.setflags(write=False)
        ops.append(h)
    B = np.stack([_traceless(h).ravel() for h in ops], axis=1)
    if np.any(np.linalg.norm(B, axis=0) < 1e-12):
        raise AnsatzDegenerate(f"ansatz A_{k} contains an operator proportional to the identity at {s}")
    Gn, _ = _normalized_gram(B)
    ev = np.linalg.eigvalsh(Gn)
    ratio = ev[0] / ev[-1]
    if ratio <= GRAM_TOL:
        raise AnsatzDegenerate(
            f"ansatz A_{k} is linearly dependent at {s} (normalised Gram eigenvalue ratio {ratio:.2e})"
        )
    return AnsatzSet(order=k, labels=labels, operators=tuple(ops), spin=s, gram_condition=float(1 / ratio))


def ansatz_set(s: SpinSize, k: int, variant: FloquetVariant = FloquetVariant.THREE_STEP) -> AnsatzSet:
    """Ansatz set ``A_k``: 5, 9 and 18 operator products for ``k = 0, 1, 2``.

    Both Floquet variants share the same lists; the two-step drive only
    needs a subset of them.
    """
    FloquetVariant(variant)
    return _ansatz_cached(s.two_s, _check_order(k))


@dataclass(frozen=True, eq=False)
class FMCoefficients:
    """Coefficients of ``H_F^(k)(tau)`` in the ``A_k`` basis."""

    ansatz_order: int
    tau: float
    values: np.ndarray
    labels: tuple[str, ...]
    normalized: bool = False
    residual: float = 0.0
    gram_condition: float = float("nan")

    def normalize(self) -> "FMCoefficients":
        v = self.values / np.linalg.norm(self.values)
        return FMCoefficients(
            self.ansatz_order, self.tau, v, self.labels, True, self.residual, self.gram_condition
        )

    def as_dict(self) -> dict[str, complex]:
        return dict(zip(self.labels, self.values))


def project_onto_ansatz(ansatz: AnsatzSet, X: np.ndarray, tol: float = SPAN_TOL) -> tuple[np.ndarray, float, float]:
    """Expand `X` (modulo identity) in `ansatz`.

    Returns ``(coefficients, relative HS residual, Gram condition number)``.
    The Gram system is equilibrated to unit diagonal before the Cholesky
    solve because the ansatz operators differ in norm by many decades.
    """
    B = ansatz._basis()
    x = _traceless(np.asarray(X)).ravel()
    Gn, d = _normalized_gram(B)
    rhs = (B.conj().T @ x) / d
    cond = float(np.linalg.cond(Gn))
    c = scipy.linalg.cho_solve(scipy.linalg.cho_factor(Gn), rhs) / d
    xnorm = np.linalg.norm(x)
    residual = float(np.linalg.norm(B @ c - x) / xnorm) if xnorm > 0 else 0.0
    if residual > tol:
        raise SpanFailure(
            f"operator not in span of A_{ansatz.order}: relative residual {residual:.3e} > {tol:g}"
        )
    return c, residual, cond


def project_fm_coefficients(
    params: ModelParams,
    s: SpinSize,
    k: int,
    tau: float,
    variant: FloquetVariant = FloquetVariant.THREE_STEP,
) -> FMCoefficients:
    """Expand the order-`k` truncated FM Hamiltonian at step `tau` in ``A_k``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    ansatz = ansatz_set(s, k, variant)
    X = truncated_floquet_hamiltonian(params, s, k, tau, variant)
    c, residual, cond = project_onto_ansatz(ansatz, X)
    return FMCoefficients(k, float(tau), c, ansatz.labels, False, residual, cond)
