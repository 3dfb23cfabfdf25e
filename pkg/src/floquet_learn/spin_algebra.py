"""Collective spin operators, coherent states and hermitian exponentials.

All operators are dense complex ``(D, D)`` arrays in the S_z eigenbasis,
ordered m = S, S-1, ..., -S.  States are complex length-``D`` vectors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NotHermitian, UnknownAxis

SpinMatrix = np.ndarray
StateVector = np.ndarray

HERMITIAN_TOL = 1e-10

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SpinSize:
    """Spin quantum number stored as ``two_s = 2S`` so half-integers are exact."""

    two_s: int

    def __post_init__(self):
        if not isinstance(self.two_s, (int, np.integer)) or self.two_s < 1:
            raise ValueError(f"two_s must be a positive integer, got {self.two_s!r}")
        object.__setattr__(self, "two_s", int(self.two_s))

    @classmethod
    def from_spin(cls, s: float) -> "SpinSize":
        two_s = round(2 * s)
        if not math.isclose(two_s, 2 * s, abs_tol=1e-12):
            raise ValueError(f"spin must be integer or half-integer, got {s!r}")
        return cls(two_s)

    @property
    def dim(self) -> int:
        return self.two_s + 1

    @property
    def s(self) -> float:
        return self.two_s / 2

    def __str__(self):
        return f"S={self.two_s // 2}" if self.two_s % 2 == 0 else f"S={self.two_s}/2"


def _as_spin(s: Union[SpinSize, int]) -> SpinSize:
    return s if isinstance(s, SpinSize) else SpinSize(s)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=32)
def _spin_operators(two_s: int):
    S = two_s / 2
    m = S - np.arange(two_s + 1)
    # <m+1|S_+|m> sits one row above the diagonal because m decreases with index
    ladder = np.sqrt(S * (S + 1) - m[1:] * (m[1:] + 1))
    s_plus = np.diag(ladder, 1).astype(complex)
    s_x = (s_plus + s_plus.conj().T) / 2
    s_y = (s_plus - s_plus.conj().T) / 2j
    s_z = np.diag(m).astype(complex)
    return _frozen(s_x), _frozen(s_y), _frozen(s_z)


def build_spin_operators(s: SpinSize) -> tuple[SpinMatrix, SpinMatrix, SpinMatrix]:
    """Return ``(S_x, S_y, S_z)`` for spin size `s`.

    The returned arrays are cached and read-only; copy before mutating.
    """
    return _spin_operators(_as_spin(s).two_s)


def spin_operator(s: SpinSize, axis: str) -> SpinMatrix:
    try:
        idx = AXES.index(axis)
    except ValueError:
        raise UnknownAxis(f"unknown spin axis {axis!r}; expected one of x, y, z") from None
    return build_spin_operators(s)[idx]


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {H.shape}")
    dev = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if dev > tol:
        raise NotHermitian(f"matrix deviates from hermiticity by {dev:.3e} (> {tol:g})")


def expm_hermitian(H: SpinMatrix, t: float) -> SpinMatrix:
    """Return ``exp(-i H t)`` via the spectral decomposition of hermitian `H`."""
    check_hermitian(H)
    H = np.asarray(H, dtype=complex)
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


@lru_cache(maxsize=32)
def _sy_spectrum(two_s: int):
    _, s_y, s_z = _spin_operators(two_s)
    w, V = np.linalg.eigh(s_y)
    # components of |S, S_z = S> in the S_y eigenbasis
    top = V[0, :].conj()
    return _frozen(w), _frozen(V), _frozen(top), _frozen(np.diag(s_z).real.copy())


def coherent_states(s: SpinSize, thetas: Iterable[float], phis: Iterable[float]) -> np.ndarray:
    """Spin coherent states ``|theta, phi>``, one per row.

    Uses ``exp(i theta (S_x sin phi - S_y cos phi)) =
    exp(-i phi S_z) exp(-i theta S_y) exp(i phi S_z)`` so only the cached
    spectral decomposition of ``S_y`` is needed.
    """
    s = _as_spin(s)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    if thetas.shape != phis.shape:
        raise DimensionMismatch("thetas and phis must have the same shape")
    w, V, top, m = _sy_spectrum(s.two_s)
    rotated = (np.exp(-1j * np.outer(thetas, w)) * top) @ V.T
    phase = np.exp(-1j * np.outer(phis, m - s.s))
    return rotated * phase


def coherent_state(s: SpinSize, theta: float, phi: float) -> StateVector:
    """Return ``|theta, phi> = exp(i theta (S_x sin phi - S_y cos phi)) |S, S_z=S>``."""
    return coherent_states(s, [theta], [phi])[0]


_TOKEN = re.compile(r"^S?([a-zA-Z])(?:\^?(\d+))?$")


def parse_label(labels: Union[str, Sequence]) -> list[tuple[str, int]]:
    """Normalise an operator-product label into ``[(axis, power), ...]``.

    Accepts ``"Sx^2 Sz"``, ``["x2", "z"]`` or ``[("x", 2), ("z", 1)]``.
    """
    if isinstance(labels, str):
        labels = labels.split()
    factors = []
    for tok in labels:
        if isinstance(tok, tuple):
            axis, power = tok
        else:
            match = _TOKEN.match(str(tok))
            if match is None:
                raise UnknownAxis(f"cannot parse operator label {tok!r}")
            axis, power = match.group(1), int(match.group(2) or 1)
        axis = str(axis).lower()
        if axis not in AXES:
            raise UnknownAxis(f"unknown spin axis {axis!r} in label {tok!r}")
        if int(power) < 1:
            raise ValueError(f"operator powers must be positive, got {power}")
        factors.append((axis, int(power)))
    if not factors:
        raise ValueError("operator label must contain at least one factor")
    return factors


def format_label(factors: Sequence[tuple[str, int]]) -> str:
    return " ".join(f"S{a}" if p == 1 else f"S{a}^{p}" for a, p in factors)


def operator_product(s: SpinSize, labels: Union[str, Sequence]) -> SpinMatrix:
    """Left-to-right matrix product of the named spin operators and powers."""
    out = None
    for axis, power in parse_label(labels):
        factor = np.linalg.matrix_power(spin_operator(s, axis), power)
        out = factor if out is None else out @ factor
    return np.array(out)


def hs_inner(A: SpinMatrix, B: SpinMatrix) -> complex:
    """Hilbert-Schmidt inner product ``tr(A^dagger B)``."""
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return complex(np.vdot(A, B))


def expectation(op: SpinMatrix, psi: StateVector) -> complex:
    return complex(np.vdot(psi, op @ psi))


def expectations(op: SpinMatrix, states: np.ndarray) -> np.ndarray:
    """``<psi_i| op |psi_i>`` for every row ``psi_i`` of `states`."""
    return np.einsum("ij,ij->i", states.conj(), states @ op.T)
