import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncwarp.errors import FaithfulnessError, OperatorTrustError
from ncwarp.qoperators import (
    MatrixOperator,
    RepresentationConfig,
    build_dX,
    build_qp,
    build_X,
    ccr_residual,
    conjugate,
    conjugation_trust,
    hermiticity_report,
    measured_prefactor,
    quadrature_warped_convolution,
    verify_adjoint_action,
    verify_commutator,
)

EPS = np.finfo(float).eps


def ops(N=64, a=1.0, q=1.0):
    cfg = RepresentationConfig(N, a, q)
    X = build_X(cfg)
    return cfg, X, build_dX(cfg, X)


def test_ccr_edge_structure():
    assert ccr_residual(16, 12) <= 100 * EPS
    assert ccr_residual(16) > 1  # the defect lives in the last row/column
    Q, P = build_qp(16)
    assert np.array_equal(Q, Q.conj().T) and np.array_equal(P, P.conj().T)
    assert abs(np.trace(Q @ P - P @ Q)) <= 1e-12


def test_X_properties():
    cfg, X, _ = ops(32)
    assert X.hermiticity_defect() <= 1e-14
    X2 = build_X(RepresentationConfig(32, 2.0))
    assert np.array_equal(X2.matrix, 2 * X.matrix)
    ev = np.linalg.eigvalsh(X.block)
    assert np.allclose(np.sort(ev), np.sort(-ev), atol=1e-10)


def test_dX_is_scaled_momentum():
    for a, q in [(1.0, 1.0), (-0.5, 2.0), (1.7, 0.3)]:
        cfg, X, dX = ops(48, a, q)
        _, P = build_qp(48)
        M = dX.trusted
        assert np.max(np.abs(dX.block - q * a * P[:M, :M])) <= 1e-12
        assert dX.is_hermitian()
    _, _, dX0 = ops(32, 1.0, 0.0)
    assert not np.any(dX0.matrix)


@pytest.mark.parametrize("a", [1.0, -0.5])
def test_commutator(a):
    _, X, dX = ops(32, a)
    assert verify_commutator(X, dX, a) <= 1e-10
    assert verify_commutator(X, dX, a, projected=False) > 0.1


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0))
def test_q_independence(q):
    _, X, dX = ops(40, 1.0, q)
    _, _, dX1 = ops(40, 1.0, 1.0)
    assert np.allclose(dX.matrix, q * dX1.matrix, rtol=0, atol=1e-12 * max(q, 1))
    assert verify_commutator(X, dX, 1.0) <= 1e-10


def test_adjoint_action_on_trusted_block():
    for N in (48, 64, 96):
        _, X, dX = ops(N)
        assert verify_adjoint_action(X, dX, 1.0, 0.3) <= 1e-6
    # a fixed block converges as the truncation grows
    M = conjugation_trust(48, 0.3)
    res = [verify_adjoint_action(*ops(N)[1:], 1.0, 0.3, trusted=M) for N in (48, 64)]
    assert res[1] < res[0]
    _, X, dX = ops(64)
    assert verify_adjoint_action(X, dX, 1.0, 0.0) == 0.0
    M = conjugation_trust(64, 0.3)
    assert math.isclose(measured_prefactor(X, dX, 0.3, M), math.exp(-0.3), rel_tol=1e-8)


def test_half_block_converges():
    res = [verify_adjoint_action(*ops(N)[1:], 1.0, 0.3, trusted=N // 2) for N in (48, 64, 96)]
    assert res[0] > res[1] > res[2]


@pytest.mark.xfail(strict=True, reason="truncation error on the M = N/2 block is ~8e-2 at N = 64")
def test_half_block_bound():
    _, X, dX = ops(64)
    assert verify_adjoint_action(X, dX, 1.0, 0.3, trusted=32) <= 1e-6


@pytest.mark.parametrize("N,r", [(32, 0.1), (48, 0.3), (64, 0.3), (64, 0.5), (96, 0.8), (160, 1.0)])
def test_conjugation_trust_calibration(N, r):
    # the trusted block must agree with a much larger truncation
    M = conjugation_trust(N, r)
    small, big = ops(N)[1], ops(3 * N)[1]
    _, P_small = build_qp(N)
    _, P_big = build_qp(3 * N)
    a = conjugate(small, P_small, r)[:M, :M]
    b = conjugate(big, P_big, r)[:M, :M]
    assert np.linalg.norm(a - b) / np.linalg.norm(b) <= 1e-6


def test_trust_exhausted():
    with pytest.raises(OperatorTrustError):
        conjugation_trust(64, 0.8)


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_group_law(p1, p2):
    _, X, dX = ops(96)
    M = conjugation_trust(96, abs(p1) + abs(p2))
    lhs = conjugate(X, conjugate(X, dX.matrix, p2), p1)[:M, :M]
    rhs = conjugate(X, dX.matrix, p1 + p2)[:M, :M]
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


def test_hermiticity():
    rep = hermiticity_report(RepresentationConfig(64))
    assert max(rep.values()) <= 1e-12


def test_guards():
    with pytest.raises(FaithfulnessError):
        RepresentationConfig(32, a=0.0)
    with pytest.raises(OperatorTrustError):
        RepresentationConfig(8)
    with pytest.raises(OperatorTrustError):
        MatrixOperator(np.eye(16), 14)
    _, X, dX = ops(32)
    with pytest.raises(OperatorTrustError):
        verify_adjoint_action(X, dX, 1.0, 2.5)
    cfg = RepresentationConfig(32)
    with pytest.raises(OperatorTrustError):
        quadrature_warped_convolution(cfg, cfg, 0.1)


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.0, 0.1])
def test_quadrature_corroboration(theta):
    cfg = RepresentationConfig(24)
    res = quadrature_warped_convolution(cfg, cfg, theta)
    assert res.monotone
    assert res.extrapolated <= 0.05
