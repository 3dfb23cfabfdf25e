"""Kicked-top Hamiltonians, Trotter-step Floquet operators and stroboscopic evolution."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import DimensionMismatch
from .spin_algebra import SpinMatrix, SpinSize, StateVector, build_spin_operators, expm_hermitian

RENORMALIZE_EVERY = 100


@dataclass(frozen=True)
class ModelParams:
    """Couplings ``J_mu`` and fields ``h_mu`` in ``H_mu = J_mu S_mu^2 / (2S+1) + h_mu S_mu``.

    ``J_z`` sets the unit of energy and must be nonzero.
    """

    J_x: float = 0.4
    J_y: float = 0.0
    J_z: float = 1.0
    h_x: float = 0.11
    h_y: float = 0.1
    h_z: float = 0.1

    def __post_init__(self):
        if self.J_z == 0:
            raise ValueError("J_z is the unit of energy and must be nonzero")

    @classmethod
    def preset(cls, name: str) -> "ModelParams":
        try:
            return PARAM_PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown parameter preset {name!r}; known: {sorted(PARAM_PRESETS)}") from None

    def couplings(self, axis: str) -> tuple[float, float]:
        return getattr(self, f"J_{axis}"), getattr(self, f"h_{axis}")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("J_x", "J_y", "J_z", "h_x", "h_y", "h_z")}


DEFAULT_PARAMS = ModelParams(J_x=0.4, J_y=0.0, J_z=1.0, h_x=0.11, h_y=0.1, h_z=0.1)
PARAM_PRESETS = {"paper-default": DEFAULT_PARAMS}


class FloquetVariant(str, enum.Enum):
    TWO_STEP = "two-step"
    THREE_STEP = "three-step"

    @property
    def axes(self) -> tuple[str, ...]:
        # order in which the gates act on the state
        return ("x", "z") if self is FloquetVariant.TWO_STEP else ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class TrotterStep:
    """One Trotter cycle ``U`` of duration ``tau``.

    ``variant`` is ``None`` for exact evolution under the target Hamiltonian.
    """

    tau: float
    U: SpinMatrix = field(repr=False)
    variant: Optional[FloquetVariant]
    params: ModelParams
    spin: SpinSize

    @property
    def dim(self) -> int:
        return self.spin.dim


def build_hamiltonians(params: ModelParams, s: SpinSize):
    """Return ``(H_x, H_y, H_z, H_target)`` with ``H_target = H_x + H_y + H_z``."""
    ops = dict(zip("xyz", build_spin_operators(s)))
    parts = []
    for axis in "xyz":
        J, h = params.couplings(axis)
        S_mu = ops[axis]
        parts.append(J * (S_mu @ S_mu) / s.dim + h * S_mu)
    H_x, H_y, H_z = parts
    return H_x, H_y, H_z, H_x + H_y + H_z


def floquet_operator(
    params: ModelParams,
    s: SpinSize,
    tau: float,
    variant: FloquetVariant = FloquetVariant.THREE_STEP,
) -> TrotterStep:
    """``U = exp(-i H_z tau) exp(-i H_y tau) exp(-i H_x tau)``; ``H_x`` acts first.

    The two-step variant omits the ``H_y`` gate.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    variant = FloquetVariant(variant)
    H = dict(zip("xyz", build_hamiltonians(params, s)[:3]))
    U = np.eye(s.dim, dtype=complex)
    for axis in variant.axes:
        U = expm_hermitian(H[axis], tau) @ U
    return TrotterStep(tau=float(tau), U=U, variant=variant, params=params, spin=s)


def exact_step(params: ModelParams, s: SpinSize, tau: float) -> TrotterStep:
    """Time-``tau`` propagator of the target Hamiltonian itself (no Trotter error)."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    H_target = build_hamiltonians(params, s)[3]
    return TrotterStep(tau=float(tau), U=expm_hermitian(H_target, tau), variant=None, params=params, spin=s)


def iterate_evolution(step: TrotterStep, psi0: StateVector, n: int) -> Iterator[StateVector]:
    """Yield ``U^k psi0`` for ``k = 1..n``, renormalising every few hundred steps."""
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape[-1] != step.dim:
        raise DimensionMismatch(f"state dimension {psi.shape[-1]} != operator dimension {step.dim}")
    U = step.U
    for k in range(1, n + 1):
        psi = U @ psi
        if k % RENORMALIZE_EVERY == 0:
            psi = psi / np.linalg.norm(psi)
        yield psi


def evolve(step: TrotterStep, psi0: StateVector, n: int) -> StateVector:
    """Apply the Trotter step `n` times to `psi0` by repeated matrix-vector products."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    psi = np.array(psi0, dtype=complex)
    if psi.shape[-1] != step.dim:
        raise DimensionMismatch(f"state dimension {psi.shape[-1]} != operator dimension {step.dim}")
    for psi in iterate_evolution(step, psi, n):
        pass
    return psi / np.linalg.norm(psi)


def step_power(step: TrotterStep, n: int) -> SpinMatrix:
    """``U^n`` by binary powering; used when many states share the same step."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return np.linalg.matrix_power(step.U, n)
