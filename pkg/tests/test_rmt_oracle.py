from __future__ import annotations

import math

import numpy as np
import pytest

from floquet_learn.errors import QuadratureOrderTooLow
from floquet_learn.magnus import ansatz_set
from floquet_learn.rmt_oracle import (
    QSource,
    _q_from_moments,
    analytic_q_a0,
    ise_average_Q,
    lambda_rmt,
    monte_carlo_lambda,
    monte_carlo_q,
    q_cue_element,
    sample_haar_unitary,
    sphere_quadrature,
)
from floquet_learn.spin_algebra import SpinSize, build_spin_operators, coherent_state, operator_product

# reference values produced by the exact quadrature and cross-checked against
# the symmetric-subspace oracle below at small spin
LAMBDA_RMT_REFERENCE = {
    8: (2.4494897427831774, 2.2137118298151752, 0.3894794908109295),
    32: (9.380831519646854, 9.356108979283855, 2.1050458010283704),
    256: (74.04503134354573, 74.04218400266774, 18.75126601843652),
}


def _batch_haar(n, dim, rng):
    Z = (rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=1, axis2=2)
    return Q * (d / np.abs(d))[:, None, :]


@pytest.mark.parametrize("labels", [("Sz", "Sx"), ("Sx^2", "Sz^2"), ("Sx Sy", "Sz"), ("Sx Sy", "Sx Sy")])
def test_q_cue_element_against_haar_sampling(labels):
    s = SpinSize(2)
    h_j, h_k = (operator_product(s, lab) for lab in labels)
    psi = coherent_state(s, 0.7, 0.3)
    rho_j, rho_k = np.vdot(psi, h_j @ psi), np.vdot(psi, h_k @ psi)
    rng = np.random.default_rng(0)
    U = _batch_haar(40000, 3, rng)
    phi = U @ psi
    a_j = np.einsum("ni,ij,nj->n", phi.conj(), h_j, phi) - rho_j
    a_k = np.einsum("ni,ij,nj->n", phi.conj(), h_k, phi) - rho_k
    sampled = np.mean(a_j.conj() * a_k)
    err = np.std(a_j.conj() * a_k) / math.sqrt(len(a_j))
    exact = q_cue_element(rho_j, rho_k, h_j, h_k)
    assert abs(sampled - exact) < 5 * err + 1e-12


def _symmetric_subspace_Q(ansatz):
    """Exact ISE moments: coherent states average to I/D and their tensor square to the max-spin projector."""
    s = ansatz.spin
    D = s.dim
    ops = build_spin_operators(s)
    eye = np.eye(D)
    total = [np.kron(S, eye) + np.kron(eye, S) for S in ops]
    casimir = sum(T @ T for T in total)
    w, V = np.linalg.eigh(casimir)
    J = 2 * s.s
    P = V[:, np.abs(w - J * (J + 1)) < 1e-6]
    proj = P @ P.conj().T
    assert P.shape[1] == 2 * s.two_s + 1
    first = np.array([np.trace(h) / D for h in ansatz.operators])
    n = len(ansatz)
    second = np.empty((n, n), dtype=complex)
    for j, hj in enumerate(ansatz.operators):
        for k, hk in enumerate(ansatz.operators):
            # E[conj(tr rho h_j) tr(rho h_k)] = tr[(h_j^dagger (x) h_k) Pi] / dim(Pi)
            second[j, k] = np.trace(np.kron(hj.conj().T, hk) @ proj) / P.shape[1]
    return _q_from_moments(ansatz, first, second)


@pytest.mark.parametrize("two_s,k", [(4, 0), (6, 1), (8, 2), (12, 2)])
def test_quadrature_matches_symmetric_subspace_oracle(two_s, k):
    ansatz = ansatz_set(SpinSize(two_s), k)
    Q = ise_average_Q(ansatz)
    ref = _symmetric_subspace_Q(ansatz)
    np.testing.assert_allclose(Q.entries, ref, atol=1e-10 * np.max(np.abs(ref)))
    assert Q.source is QSource.QUADRATURE_ISE


@pytest.mark.parametrize("two_s", [8, 32, 128, 256])
def test_quadrature_matches_closed_form(two_s):
    s = SpinSize(two_s)
    Q = ise_average_Q(ansatz_set(s, 0)).entries
    A = analytic_q_a0(s).entries
    scale = np.sqrt(np.outer(np.diag(A).real, np.diag(A).real))
    assert np.max(np.abs(Q - A) / scale) < 1e-8


def test_closed_form_entries():
    S = 5
    Q = analytic_q_a0(SpinSize(2 * S))
    assert Q.entry("Sx", "Sx") == pytest.approx(S * (2 * S + 1) / 6)
    assert Q.entry("Sz^2", "Sz^2") == pytest.approx(S * (8 * S**3 - 4 * S**2 + 6 * S - 3) / 90)
    assert Q.entry("Sx^2", "Sz^2") == pytest.approx(-S * (8 * S**3 - 4 * S**2 + 6 * S - 3) / 180)
    assert Q.entry("Sx", "Sz") == 0


@pytest.mark.parametrize("two_s", sorted(LAMBDA_RMT_REFERENCE))
def test_lambda_rmt_reference(two_s):
    s = SpinSize(two_s)
    for k, ref in enumerate(LAMBDA_RMT_REFERENCE[two_s]):
        assert lambda_rmt(ise_average_Q(ansatz_set(s, k))) == pytest.approx(ref, rel=1e-10)


def test_lambda_rmt_a0_large_spin_formula():
    # for S >= 2 the lowest eigenvalue is the linear-operator variance S(2S+1)/6
    S = 64
    assert lambda_rmt(analytic_q_a0(SpinSize(2 * S))) == pytest.approx(math.sqrt(S * (2 * S + 1) / 6))


def test_qmatrix_hermitian_psd():
    Q = ise_average_Q(ansatz_set(SpinSize(20), 2)).entries
    np.testing.assert_allclose(Q, Q.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(Q)[0] > 0


def test_quadrature_weights():
    theta, phi, w = sphere_quadrature(6, 13)
    assert w.sum() == pytest.approx(1.0)
    # exact for a degree-4 polynomial on the sphere: <z^4> = 1/5
    assert np.sum(w * np.cos(theta) ** 4) == pytest.approx(0.2)
    assert np.sum(w * (np.sin(theta) * np.cos(phi)) ** 2) == pytest.approx(1 / 3)


def test_quadrature_order_too_low_is_detected(monkeypatch):
    import floquet_learn.rmt_oracle as ro

    monkeypatch.setattr(ro, "_polynomial_degree", lambda ansatz: -1)
    with pytest.raises(QuadratureOrderTooLow):
        ise_average_Q(ansatz_set(SpinSize(20), 2))


@pytest.mark.parametrize("dim", [2, 7, 40])
def test_haar_unitary(dim):
    U = sample_haar_unitary(dim, seed=3)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(dim), atol=1e-12)
    np.testing.assert_array_equal(U, sample_haar_unitary(dim, seed=3))


def test_haar_first_moment():
    # E|U_00|^2 = 1/D and E U_00 = 0
    rng = np.random.default_rng(0)
    entries = np.array([sample_haar_unitary(5, rng)[0, 0] for _ in range(4000)])
    assert np.mean(np.abs(entries) ** 2) == pytest.approx(0.2, abs=0.01)
    assert abs(np.mean(entries)) < 0.03


def test_haar_dimension_check():
    with pytest.raises(ValueError):
        sample_haar_unitary(1, seed=0)


def test_monte_carlo_q_converges_to_oracle():
    ansatz = ansatz_set(SpinSize(8), 0)
    mc = monte_carlo_q(ansatz, n_samples=400, seed=1)
    ref = ise_average_Q(ansatz).entries
    z = np.abs(mc.entries - ref) / np.maximum(mc.stderr, 1e-12)
    assert np.max(z[np.abs(ref) > 1e-9]) < 5
    assert mc.source is QSource.MONTE_CARLO


def test_monte_carlo_lambda_bias_shrinks_with_dimension():
    devs = []
    for two_s in (8, 32):
        ansatz = ansatz_set(SpinSize(two_s), 0)
        mean, _ = monte_carlo_lambda(ansatz, n_samples=20, seed=0)
        ref = lambda_rmt(ise_average_Q(ansatz))
        devs.append(abs(mean - ref) / ref)
    assert devs[1] < devs[0]


def test_monte_carlo_lambda_deterministic():
    ansatz = ansatz_set(SpinSize(8), 1)
    assert monte_carlo_lambda(ansatz, n_samples=5, seed=2) == monte_carlo_lambda(ansatz, n_samples=5, seed=2)
    with pytest.raises(ValueError):
        monte_carlo_lambda(ansatz, n_samples=1)
