import math

import numpy as np
import pytest

from wkblab.errors import QuadratureNotConverged
from wkblab.quadrature import bump, integrate_plane, plane_rule


def test_bump_partition():
    s = np.linspace(0, 1.2, 25)
    b = bump(s)
    assert np.all(b[s <= 0.5] == 1) and np.all(b[s >= 1] == 0)
    assert np.all(np.diff(b) <= 0)


def test_smooth_decaying_integrand():
    # closed form: integral of 1/(1+|x|^2)^2 over C is pi
    val = integrate_plane(lambda x: 1 / (1 + np.abs(x) ** 2) ** 2, [0j, 1 + 1j])
    assert abs(val - math.pi) < 1e-8


def test_point_singularity():
    # integral of exp(-|x - c|^2) / |x - c| over C is pi^(3/2)
    c = 0.3 - 0.2j
    val = integrate_plane(lambda x: np.exp(-np.abs(x - c) ** 2) / np.abs(x - c), [c, 2.0])
    assert abs(val - math.pi**1.5) < 1e-7


def test_weights_sum_over_disc():
    x, w = plane_rule([0j, 1.0], level=3)
    area = np.sum(w * (np.abs(x) < 1))
    assert abs(area - math.pi) < 5e-2  # indicator is discontinuous; coarse check only


def test_not_converged():
    with pytest.raises(QuadratureNotConverged):
        integrate_plane(lambda x: np.cos(40 * x.real) / (1 + np.abs(x) ** 3), [0j], tol=1e-14,
                        min_level=2, max_level=3)


def test_close_pair_and_far_center():
    # same closed form; extra centers at distance 1e-3 and 40 must not spoil it
    c = 0.3 - 0.2j
    val = integrate_plane(lambda x: np.exp(-np.abs(x - c) ** 2) / np.abs(x - c), [c, c + 1e-3j, 40.0])
    assert abs(val - math.pi**1.5) < 1e-7


def test_partition_sums_to_one():
    from wkblab.quadrature import shepard_weights
    c = np.array([0, 1e-3, 2 + 1j, -30j])
    x = np.random.default_rng(1).standard_normal(50) * 10 + 0j
    assert np.allclose(shepard_weights(x, c).sum(axis=0), 1.0)
