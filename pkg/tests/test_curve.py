import numpy as np
import pytest

from wkblab.curve import PathOnCurve, canonical_generators, circle_path, continue_sheet, lasso, make_curve
from wkblab.errors import BadDegree, PathTooClose, RepeatedRoots


def test_degree_checks():
    with pytest.raises(BadDegree):
        make_curve([1, 0, 0, 0, 1])
    with pytest.raises(BadDegree):
        make_curve([1, 0, 0, 0, 0, 0, 0, 1])
    with pytest.raises(BadDegree):
        make_curve([0, 0])


def test_repeated_roots():
    p = np.poly([0.3, 0.3, 1, 2, -1, 1j])
    with pytest.raises(RepeatedRoots):
        make_curve(p)


def test_branch_points_rebuild_polynomial(sextic):
    # oracle: numpy's polynomial from roots
    rebuilt = sextic.p_coeffs[0] * np.poly(sextic.branch_points)
    assert np.allclose(rebuilt, sextic.p_coeffs, atol=1e-12)
    x = np.array([0.3 + 0.2j, -2.0, 1.5j])
    assert np.allclose(sextic.p(x), np.polyval(sextic.p_coeffs, x), rtol=1e-12)


def test_quintic_branch_points(quintic):
    expected = np.sort_complex(np.array([0, 1, -1, 1j, -1j]))
    assert np.allclose(np.sort_complex(quintic.branch_points), expected, atol=1e-12)


def test_sheet_flip_around_one_branch_point(quintic):
    loop = circle_path(1.0, 0.3)
    assert continue_sheet(quintic, loop) == -1


def test_same_sheet_around_two_branch_points(quintic):
    loop = circle_path(0.5, 0.8)  # encloses 0 and 1 only
    assert continue_sheet(quintic, loop) == 1


def test_path_through_branch_point_rejected(quintic):
    with pytest.raises(PathTooClose):
        continue_sheet(quintic, circle_path(0.5, 0.5))


def test_generators_are_closed_loops(quintic, sextic):
    for curve in (quintic, sextic):
        gens = canonical_generators(curve)
        for loop in gens.loops:
            assert abs(loop.start - gens.base_point) < 1e-14
            assert abs(loop.end - gens.base_point) < 1e-14
            # every generator returns to its sheet
            assert continue_sheet(curve, loop) == 1


def test_path_roundtrip():
    p = lasso(-2j, 0.5, 0.1)
    q = PathOnCurve.from_dict(p.to_dict())
    u = np.linspace(0, 1, 7)
    for a, b in zip(p.segments, q.segments):
        assert np.allclose(a.point(u), b.point(u))
