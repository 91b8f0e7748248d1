import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from conftest import unit_det_system
from wkblab.curve import SheetTrack, canonical_generators, circle_path, lasso
from wkblab.differentials import random_system, zero_system
from wkblab.errors import RelationViolation, VanishingTrace
from wkblab.hiprec import to_numpy, transfer_matrix_mp
from wkblab.monodromy import (corner_deviation, dominant_corner, log_char, relation_monodromy,
                              representation, transfer_matrix, wkb_model_ode)
from wkblab.propagate import RenormalizedMatrix


def _dop853_transport(curve, A, t, path):
    """Oracle: integrate F together with y, using y' = p'(x) x' / (2y),
    so the branch is continued by the ODE itself."""
    F = np.eye(2, dtype=complex)
    y = complex(path.start_sheet * curve.y_principal(path.start))
    for seg in path.segments:
        def rhs(u, z):
            x, dx = seg.point(u), seg.deriv(u)
            F_, yy = z[:4].reshape(2, 2), z[4]
            N = A.numerator_matrix(x)
            dF = -t * dx / yy * N @ F_
            dy = curve.dp(x) * dx / (2 * yy)
            return np.concatenate([dF.ravel(), [dy]])

        sol = solve_ivp(rhs, (0, 1), np.concatenate([F.ravel(), [y]]), method="DOP853",
                        rtol=1e-12, atol=1e-14)
        F, y = sol.y[:4, -1].reshape(2, 2), sol.y[4, -1]
    return F


def test_transport_matches_dop853(sextic, rng):
    A = random_system(sextic, rng)
    path = canonical_generators(sextic).loops[0]
    ref = _dop853_transport(sextic, A, 0.7, path)
    M = transfer_matrix(sextic, A, 0.7, path, tol=1e-12).to_array()
    assert np.abs(M - ref).max() <= 1e-9 * np.abs(ref).max()


def test_trivial_cases(sextic, rng):
    loop = circle_path(0, 5.0)
    assert np.array_equal(transfer_matrix(sextic, zero_system(sextic), 3.0, loop).to_array(), np.eye(2))
    assert np.array_equal(transfer_matrix(sextic, random_system(sextic, rng), 0.0, loop).to_array(), np.eye(2))
    with pytest.raises(ValueError):
        transfer_matrix(sextic, random_system(sextic, rng), -1.0, loop)


@pytest.mark.parametrize("name", ["quintic", "sextic"])
def test_relation_defect(name, request, rng):
    curve = request.getfixturevalue(name)
    A = unit_det_system(curve, rng)
    rep = representation(curve, A, 1.0, canonical_generators(curve), tol=1e-8)
    assert rep.defect <= 1e-8
    for m in rep.gens:
        assert m.is_unimodular(1e-8)


def test_relation_violation_raised(sextic, rng):
    # a deliberately wrong generator set: swap b1 for a loop around one branch point
    gens = canonical_generators(sextic)
    bad = lasso(gens.base_point, gens.lasso_order[0], gens.radius)
    A = unit_det_system(sextic, rng)
    mats = [transfer_matrix(sextic, A, 1.0, g) for g in gens.loops]
    mats[1] = transfer_matrix(sextic, A, 1.0, bad)
    from wkblab.monodromy import defect_of
    assert defect_of(relation_monodromy(mats)) > 1e-3
    with pytest.raises(RelationViolation):
        representation(sextic, A, 1.0, gens, tol=1e-30, precision="double")


def test_trace_invariant_under_gauge(sextic, rng):
    A = random_system(sextic, rng)
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    loop = canonical_generators(sextic).loops[2]
    M = transfer_matrix(sextic, A, 0.8, loop, tol=1e-12)
    Mg = transfer_matrix(sextic, A.conjugate(g), 0.8, loop, tol=1e-12)
    tr, trg = np.trace(M.to_array()), np.trace(Mg.to_array())
    assert abs(tr - trg) <= 1e-9 * abs(tr)
    # and the matrices are conjugate by g
    assert np.allclose(Mg.to_array(), g @ M.to_array() @ np.linalg.inv(g), rtol=1e-8, atol=1e-8)


def test_reversed_loop_gives_inverse(sextic, rng):
    A = random_system(sextic, rng)
    loop = canonical_generators(sextic).loops[1]
    end = SheetTrack(sextic, loop).end_sheet()
    M = transfer_matrix(sextic, A, 0.6, loop, tol=1e-12)
    R = transfer_matrix(sextic, A, 0.6, loop.reversed(start_sheet=end), tol=1e-12)
    assert np.abs((R @ M).to_array() - np.eye(2)).max() < 1e-9


def test_multiprecision_agrees_with_double(quintic, rng):
    A = random_system(quintic, rng)
    loop = canonical_generators(quintic).loops[0]
    M = transfer_matrix(quintic, A, 0.5, loop, tol=1e-13)
    arr, ls = to_numpy(transfer_matrix_mp(quintic, A, 0.5, loop, dps=30))
    ref = arr * np.exp(ls)
    assert np.abs(M.to_array() - ref).max() <= 1e-10 * np.abs(ref).max()


def test_auto_precision_switch(sextic, rng):
    # a large system makes the double-precision word too lossy, so auto picks mp
    A = unit_det_system(sextic, rng).scaled(6.0)
    rep = representation(sextic, A, 1.0, canonical_generators(sextic), tol=1e-8, check=False,
                         precision="auto")
    if rep.roundoff_floor > 1e-10:
        assert rep.precision == "mp" and rep.defect <= 1e-8
    else:
        assert rep.precision == "double"


def test_vanishing_trace():
    with pytest.raises(VanishingTrace):
        log_char(RenormalizedMatrix.from_array(np.array([[1, 2], [3, -1]], dtype=complex)))


def test_model_ode_constant_coefficients():
    B = np.array([[0.1, 0.3j], [-0.2, -0.1]])
    a, t = 0.4 + 0.2j, 5.0
    M = wkb_model_ode(B, a, t)
    ref = expm(-(B + t * np.diag([a, -a])))
    assert np.allclose(M.to_array(), ref, rtol=1e-9)


def test_model_ode_dominant_corner():
    # Re a > 0: the solution of f' = -t a f on the second component grows
    rng = np.random.default_rng(3)
    s = np.linspace(0, 1, 33)
    B = 0.3 * (rng.standard_normal((33, 2, 2)) + 1j * rng.standard_normal((33, 2, 2)))
    a = 1.0 + 0.3 * np.sin(2 * np.pi * s) + 0.2j
    corner = dominant_corner(complex(a.mean()))
    assert corner == (1, 1)
    devs = [corner_deviation(wkb_model_ode(B, a, t), corner) for t in (5, 10, 20)]
    assert devs[2] < devs[0] and devs[2] < 0.1
