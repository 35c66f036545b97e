import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncwarp.cosmology import (
    EIGHT_PI,
    CosmologyParams,
    exact_solution,
    friedmann_residuals,
    integrate,
    rho_of_a,
)
from ncwarp.errors import ConstraintViolationError, CosmologyParameterError


def test_density_examples():
    assert math.isclose(rho_of_a(2.0, 0.0, 3.0), 3.0 / 8)
    assert math.isclose(rho_of_a(1.0, math.sqrt(EIGHT_PI / 3), 0.0), 1.0, rel_tol=1e-15)
    with pytest.raises(CosmologyParameterError):
        rho_of_a(0.0, 1.0, 1.0)


def test_einstein_de_sitter():
    C = 1.7
    tr = integrate(CosmologyParams(0.0, C, 0.0, (0.0, 10.0), samples=400))
    mask = tr.t >= 0.1
    want = (1.5 * math.sqrt(C) * tr.t[mask]) ** (2 / 3)
    assert np.max(np.abs(tr.a[mask] / want - 1)) <= 1e-6


def test_coasting():
    tr = integrate(CosmologyParams(0.8, 0.0, 0.5, (0.0, 10.0)))
    assert np.max(np.abs(tr.a - (0.5 + 0.8 * tr.t))) <= 1e-10 * np.max(tr.a)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.1, 5.0))
def test_matches_cycloid(theta, C):
    tr = integrate(CosmologyParams(theta, C, 0.0, (0.0, 5.0), samples=50))
    ref = np.array([exact_solution(t, theta, C)[0] for t in tr.t[1:]])
    assert np.max(np.abs(tr.a[1:] / ref - 1)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(
    st.one_of(st.just(0.0), st.floats(1e-3, 2.0), st.floats(-2.0, -1e-3)),
    st.one_of(st.just(0.0), st.floats(1e-3, 5.0)),
    st.one_of(st.just(0.0), st.floats(1e-3, 2.0)),
)
def test_residuals_and_shape(theta, C, a0):
    if C < 1e-3 and (a0 == 0 or theta == 0):
        C = 1e-3
    tr = integrate(CosmologyParams(theta, C, a0, (0.0, 10.0), samples=101))
    res = friedmann_residuals(tr)
    assert tr.max_constraint <= 1e-8
    assert max(res.e3, res.e4, res.continuity, res.constraint) <= 1e-8
    assert np.all(np.diff(tr.a) > 0)
    assert not tr.negative_density


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.1, 3.0))
def test_theta_sign_symmetry(theta, C):
    p = integrate(CosmologyParams(theta, C, 0.0, (0.0, 4.0), samples=41))
    m = integrate(CosmologyParams(-theta, C, 0.0, (0.0, 4.0), samples=41))
    assert np.array_equal(p.a, m.a) and np.array_equal(p.rho, m.rho)


@pytest.mark.parametrize("theta", [1e-300, 1e-10, 1e-4])
def test_tiny_theta_is_dust(theta):
    tr = integrate(CosmologyParams(theta, 1.0, 0.0, (0.0, 10.0), samples=50))
    want = (1.5 * tr.t[1:]) ** (2 / 3)
    assert np.max(np.abs(tr.a[1:] / want - 1)) <= 1e-6


def test_late_time_slope():
    theta, C = 0.5, 1.0
    tr = integrate(CosmologyParams(theta, C, 0.0, (0.0, 1e5), samples=11))
    assert abs(tr.adot[-1] - theta) <= 1e-4


def test_runtime():
    start = time.perf_counter()
    integrate(CosmologyParams(0.7, 2.0, 0.0, (0.0, 50.0), samples=1001))
    assert time.perf_counter() - start < 1.0


def test_negative_constant_keeps_density_positive():
    # C/a + Theta^2 > 0 with C' = 3C/(8 pi) forces rho > 0 even for C < 0
    tr = integrate(CosmologyParams(1.0, -0.9, 1.0, (0.0, 3.0)))
    assert not tr.negative_density
    assert friedmann_residuals(tr).e3 <= 1e-8


def test_constraint_gate():
    with pytest.raises(ConstraintViolationError):
        integrate(CosmologyParams(0.0, 1.0, 0.0, (0.0, 10.0), rtol=1e-3, atol=1e-3, constraint_tol=1e-12))


@pytest.mark.parametrize(
    "kw",
    [
        dict(theta=1.0, C=1.0, a0=-1.0),
        dict(theta=1.0, C=0.0, a0=0.0),
        dict(theta=0.0, C=-1.0, a0=0.5),
        dict(theta=1.0, C=1.0, a0=1.0, t_span=(2.0, 1.0)),
        dict(theta=2.0, C=0.0, a0=1e-300),
    ],
)
def test_invalid_parameters(kw):
    with pytest.raises(CosmologyParameterError):
        CosmologyParams(**kw)
