import math

import numpy as np
import pytest
from scipy import stats

from wkblab.errors import (Disconnected, HitsConePoint, InputError, InsertTooSteep, MismatchedEdges,
                           NotCloseEnough)
from wkblab.flat import (FlatSegment, birkhoff_average, close_up, find_wkb_curve, flat_width,
                         flat_width_fixed, flow, flow_from, make_surface, ratio_norm, regular_octagon,
                         reverse_flow, square_torus)


def test_torus_and_octagon_topology():
    t = square_torus()
    assert t.genus == 1 and t.cone_angles == () and t.area() == pytest.approx(1.0)
    o = regular_octagon()
    assert o.genus == 2
    assert o.cone_angles == pytest.approx((6 * math.pi,))
    # Gauss-Bonnet: sum of (2 pi - angle) is 2 pi chi
    assert sum(2 * math.pi - a for a, _ in o.vertex_classes) == pytest.approx(-4 * math.pi)


def test_bad_gluings():
    sq = [[0, 1, 1 + 1j, 1j]]
    with pytest.raises(MismatchedEdges):
        make_surface({"polygons": sq, "pairings": [[0, 0, 0, 1], [0, 2, 0, 3]]})
    with pytest.raises(MismatchedEdges):
        make_surface({"polygons": sq, "pairings": [[0, 0, 0, 2]]})
    with pytest.raises(Disconnected):
        make_surface({"polygons": sq + [[2, 3, 3 + 1j, 2 + 1j]],
                      "pairings": [[0, 0, 0, 2], [0, 1, 0, 3], [1, 0, 1, 2], [1, 1, 1, 3]]})
    with pytest.raises(InputError):
        make_surface({"polygons": [[0, 1j, 1 + 1j, 1]], "pairings": []})


def test_torus_flow_is_translation_mod_lattice():
    t = square_torus()
    traj = flow(t, (0, 0.123 + 0.456j), 0.7, 13.3)
    d = np.exp(-0.35j)
    z = 0.123 + 0.456j + 13.3 * d
    expect = complex(z.real % 1, z.imag % 1)
    assert abs(traj.end[1] - expect) < 1e-10
    assert traj.length == pytest.approx(13.3)


def test_reverse_flow_returns():
    o = regular_octagon()
    traj = flow(o, (0, 0.05 + 0.02j), 0.9, 25.0)
    back = reverse_flow(o, traj)
    assert back.end[0] == 0 and abs(back.end[1] - (0.05 + 0.02j)) < 1e-9


def test_hits_cone_point():
    # from the centre of the square towards the corner (1, 1)
    with pytest.raises(HitsConePoint):
        flow_from(square_torus(), (0, 0.5 + 0.5j), 1 + 1j, 5.0)
    with pytest.raises(HitsConePoint):
        flow(square_torus(), (0, 0j), 0.3, 1.0)


def test_flow_preserves_area_measure():
    # oracle: two-sample KS test between uniform start points and their images
    o = regular_octagon()
    rng = np.random.default_rng(8)
    pts = []
    while len(pts) < 600:
        z = complex(*(rng.random(2) * 2 - 1))
        if o.contains(0, z, -1e-6):
            pts.append(z)
    ends = np.array([flow(o, (0, z), 0.4, 3.7).end[1] for z in pts])
    assert np.all([o.contains(0, z, 1e-9) for z in ends])
    fresh = []
    while len(fresh) < 600:
        z = complex(*(rng.random(2) * 2 - 1))
        if o.contains(0, z, -1e-6):
            fresh.append(z)
    fresh = np.array(fresh)
    assert stats.ks_2samp(ends.real, fresh.real).pvalue > 0.01
    assert stats.ks_2samp(ends.imag, fresh.imag).pvalue > 0.01


def test_birkhoff_torus_short():
    t = square_torus()
    theta = 2 * math.atan((math.sqrt(5) - 1) / 2)
    avg = birkhoff_average(t, lambda P, z: np.cos(2 * np.pi * z.real), (0, 0.1 + 0.2j), theta, 200.0)
    assert abs(avg) <= 5 / 200
    # T = 0 returns the value at the start point
    assert birkhoff_average(t, lambda P, z: z.real, (0, 0.3 + 0.2j), theta, 0.0) == pytest.approx(0.3)


@pytest.mark.parametrize("theta", [0.0, 0.5, 1.3, 2.0, -2.5])
def test_cosine_relation(theta):
    T = 2.75
    seg = [FlatSegment(0, 0.1 + 0.4j, 0.1 + T + 0.4j)]
    r = np.exp(1j * theta)
    assert flat_width(seg, r) == pytest.approx(T * math.cos(theta / 2), abs=1e-6)
    assert flat_width_fixed(seg, r) == pytest.approx(T * math.cos(theta / 2), abs=1e-10)


def test_ratio_norm_constant():
    o = regular_octagon()
    assert ratio_norm(o, 0.3j) == pytest.approx(0.3 * o.area(), rel=1e-12)


def test_find_wkb_curve_rotated_pair():
    t = square_torus()
    ratio = np.exp(1j * math.pi / 3)
    res = find_wkb_curve(t, ratio)
    assert res.margin > 0 and res.transversality > 0
    assert res.curve.is_closed()
    segs = res.curve.all_segments
    # independent width evaluation
    assert flat_width_fixed(segs, 1.0) == pytest.approx(res.w_phi, rel=1e-9)
    assert flat_width_fixed(segs, ratio) == pytest.approx(res.w_psi, rel=1e-9)


def test_find_wkb_curve_rejects():
    t = square_torus()
    with pytest.raises(InputError):
        find_wkb_curve(t, 1.0)
    with pytest.raises(InputError):
        find_wkb_curve(t, 2.0)


def test_close_up_errors():
    t = square_torus()
    traj = flow(t, (0, 0.2 + 0.3j), 0.3, 2.0)
    with pytest.raises(NotCloseEnough):
        close_up(traj, eps=1e-6)
    with pytest.raises(InsertTooSteep):
        close_up(traj, eps=10.0, angle_bound=1e-6)
