import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from wkblab.errors import StepUnderflow
from wkblab.propagate import PropagationInfo, RenormalizedMatrix, expm2, propagate, tree_product


def test_expm2_matches_scipy(rng):
    for _ in range(20):
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert np.allclose(expm2(m[None])[0], expm(m), rtol=1e-12, atol=1e-13)
    # nilpotent and tiny-discriminant branches
    n = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(expm2(n[None])[0], np.eye(2) + n)


def _coef(u):
    u = np.asarray(u)
    k = np.zeros(u.shape + (2, 2), dtype=complex)
    k[..., 0, 0] = np.sin(3 * u)
    k[..., 0, 1] = 1 + 2j * u
    k[..., 1, 0] = np.exp(u) - 0.5
    k[..., 1, 1] = -np.sin(3 * u)
    return 4 * k


def test_against_dop853():
    # oracle: an explicit Runge-Kutta solver at tight tolerance
    def rhs(u, y):
        return (_coef(np.array([u]))[0] @ y.reshape(2, 2)).ravel()

    sol = solve_ivp(rhs, (0, 1), np.eye(2, dtype=complex).ravel(), method="DOP853", rtol=1e-13, atol=1e-13)
    ref = sol.y[:, -1].reshape(2, 2)
    got = propagate(_coef, tol=1e-12).to_array()
    assert np.abs(got - ref).max() / np.abs(ref).max() < 1e-10


def test_sixth_order():
    # fixed uniform steps, no adaptivity: error ratio under step halving ~ 2^6
    from wkblab.propagate import magnus6

    def fixed(n):
        u = np.arange(n) / n
        steps = expm2(magnus6(_coef, u, np.full(n, 1.0 / n)))
        return tree_product(steps).to_array()

    ref = fixed(512)
    e1 = np.abs(fixed(16) - ref).max()
    e2 = np.abs(fixed(32) - ref).max()
    assert 40 < e1 / e2 < 90


def test_huge_growth_is_representable():
    big = lambda u: np.broadcast_to(np.diag([2000.0, -2000.0]).astype(complex), np.shape(u) + (2, 2))
    m = propagate(big)
    assert abs(m.log_scale - 2000) < 1e-9
    # at growth exp(300) the small singular value, exp(-600), is still a double
    mid = propagate(lambda u: np.broadcast_to(np.diag([300.0, -300.0]).astype(complex), np.shape(u) + (2, 2)))
    assert mid.project_unimodular().is_unimodular(1e-10)


def test_renormalized_product_and_inverse(rng):
    a = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
    plain = a[4] @ a[3] @ a[2] @ a[1] @ a[0]
    assert np.allclose(tree_product(a).to_array(), plain)
    m = RenormalizedMatrix.from_array(a[0] / np.sqrt(np.linalg.det(a[0])))
    assert np.allclose((m.inverse() @ m).to_array(), np.eye(2), atol=1e-12)


def test_step_underflow():
    sing = lambda u: np.asarray(1.0 / (np.asarray(u) - 0.5) ** 2)[..., None, None] * np.array([[0, 1], [1, 0]])
    with pytest.raises(StepUnderflow):
        propagate(sing, tol=1e-12, h_min=1e-6)


def test_info_counts():
    info = PropagationInfo()
    propagate(_coef, info=info)
    assert info.steps > 0 and math.isfinite(info.est_error)
