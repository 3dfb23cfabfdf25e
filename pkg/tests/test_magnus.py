from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_learn.errors import AnsatzDegenerate, SpanFailure, UnsupportedOrder
from floquet_learn.kicked_top import DEFAULT_PARAMS, FloquetVariant, ModelParams, build_hamiltonians, floquet_operator
from floquet_learn.magnus import (
    ANSATZ_LABELS,
    ansatz_set,
    commutator,
    magnus_term,
    project_fm_coefficients,
    project_onto_ansatz,
    truncated_floquet_hamiltonian,
)
from floquet_learn.spin_algebra import SpinSize


def _exact_floquet_hamiltonian(params, s, tau, variant=FloquetVariant.THREE_STEP):
    U = floquet_operator(params, s, tau, variant).U
    return 1j * scipy.linalg.logm(U) / tau


@pytest.mark.parametrize("variant", list(FloquetVariant))
@pytest.mark.parametrize("k", [0, 1, 2])
def test_truncation_error_order(variant, k):
    # the residual of an order-k truncation shrinks as tau^(k+1)
    s = SpinSize(4)
    errs = []
    for tau in (0.04, 0.02):
        diff = _exact_floquet_hamiltonian(DEFAULT_PARAMS, s, tau, variant) - truncated_floquet_hamiltonian(
            DEFAULT_PARAMS, s, k, tau, variant
        )
        errs.append(np.linalg.norm(diff))
    ratio = errs[0] / errs[1]
    assert ratio == pytest.approx(2 ** (k + 1), rel=0.1)


def test_second_order_term_from_logm():
    s = SpinSize(3)
    params = ModelParams(J_x=0.7, J_y=0.3, h_x=0.2, h_y=-0.15, h_z=0.05)
    c0, c1, c2 = (magnus_term(params, s, k) for k in range(3))
    # Richardson extrapolation of (H_F - C0 - tau C1) / tau^2 to tau = 0
    est = []
    for tau in (2e-3, 1e-3):
        est.append((_exact_floquet_hamiltonian(params, s, tau) - c0 - tau * c1) / tau**2)
    extrapolated = 2 * est[1] - est[0]
    np.testing.assert_allclose(extrapolated, c2, atol=1e-3 * np.linalg.norm(c2))


def test_two_step_terms_drop_y():
    s = SpinSize(6)
    H_x, _, H_z, _ = build_hamiltonians(DEFAULT_PARAMS, s)
    np.testing.assert_allclose(magnus_term(DEFAULT_PARAMS, s, 0, FloquetVariant.TWO_STEP), H_x + H_z)
    np.testing.assert_allclose(
        magnus_term(DEFAULT_PARAMS, s, 1, FloquetVariant.TWO_STEP), 0.5j * commutator(H_x, H_z), atol=1e-12
    )


@pytest.mark.parametrize("k", [-1, 3, 1.5])
def test_unsupported_order(k):
    with pytest.raises(UnsupportedOrder):
        magnus_term(DEFAULT_PARAMS, SpinSize(4), k)


@pytest.mark.parametrize("k,size", [(0, 5), (1, 9), (2, 18)])
def test_ansatz_sizes(k, size):
    a = ansatz_set(SpinSize(20), k)
    assert len(a) == size
    assert a.labels[:5] == ANSATZ_LABELS[0]
    assert a.operators[0].shape == (21, 21)


def test_ansatz_shared_between_variants():
    s = SpinSize(10)
    assert ansatz_set(s, 2, FloquetVariant.TWO_STEP).labels == ansatz_set(s, 2).labels


def test_small_spin_ansatz_degenerate():
    # Sx^2 is proportional to the identity for spin 1/2
    with pytest.raises(AnsatzDegenerate):
        ansatz_set(SpinSize(1), 0)
    with pytest.raises(AnsatzDegenerate):
        ansatz_set(SpinSize(2), 2)


def test_first_order_coefficients_exact():
    s = SpinSize(30)
    c = project_fm_coefficients(DEFAULT_PARAMS, s, 0, 0.3)
    np.testing.assert_allclose(c.values, [0.4 / 31, 0.11, 0.1, 1 / 31, 0.1], atol=1e-12)
    assert c.residual < 1e-12


@settings(max_examples=15, deadline=None)
@given(
    two_s=st.integers(8, 24),
    couplings=st.lists(st.floats(-1, 1), min_size=5, max_size=5),
)
def test_span_closure(two_s, couplings):
    J_x, J_y, h_x, h_y, h_z = couplings
    params = ModelParams(J_x=J_x, J_y=J_y, J_z=1.0, h_x=h_x, h_y=h_y, h_z=h_z)
    s = SpinSize(two_s)
    a2 = ansatz_set(s, 2)
    for k in range(3):
        _, residual, _ = project_onto_ansatz(a2, magnus_term(params, s, k))
        assert residual < 1e-8
        _, residual, _ = project_onto_ansatz(ansatz_set(s, k), magnus_term(params, s, k))
        assert residual < 1e-8


def test_projection_reconstructs_operator():
    s = SpinSize(16)
    tau = 0.4
    c = project_fm_coefficients(DEFAULT_PARAMS, s, 2, tau)
    a = ansatz_set(s, 2)
    X = truncated_floquet_hamiltonian(DEFAULT_PARAMS, s, 2, tau)
    diff = a.combine(c.values) - X
    # equal up to a multiple of the identity
    diff -= np.trace(diff) / s.dim * np.eye(s.dim)
    assert np.linalg.norm(diff) < 1e-9 * np.linalg.norm(X)


def test_span_failure():
    s = SpinSize(16)
    rng = np.random.default_rng(0)
    A = rng.standard_normal((17, 17))
    with pytest.raises(SpanFailure):
        project_onto_ansatz(ansatz_set(s, 0), A + A.T)


def test_fm_coefficients_normalize():
    c = project_fm_coefficients(DEFAULT_PARAMS, SpinSize(12), 1, 0.5).normalize()
    assert c.normalized
    assert np.linalg.norm(c.values) == pytest.approx(1.0)
    assert set(c.as_dict()) == set(c.labels)


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        project_fm_coefficients(DEFAULT_PARAMS, SpinSize(12), 1, -0.1)
