import math

import numpy as np
import pytest

from wkblab.curve import circle_path
from wkblab.differentials import QuadraticDifferential, det_map, width
from wkblab.errors import DegenerateFit
from wkblab.wkb import (check_upper_bound, fit_slope, is_wkb_curve, model_wkb_setup, relative_error,
                        sweep, system_with_det)


def test_fit_slope_exact_line():
    t = np.linspace(1, 10, 10)
    s, b, res = fit_slope(t, 3 * t - 2)
    assert s == pytest.approx(3) and b == pytest.approx(-2) and res < 1e-12


def test_fit_slope_skips_nan_and_needs_points():
    t = np.linspace(1, 10, 10)
    y = 2 * t
    y[3] = np.nan
    assert fit_slope(t, y)[0] == pytest.approx(2)
    with pytest.raises(DegenerateFit):
        fit_slope(t[:3], y[:3])


def test_system_with_det(sextic):
    rng = np.random.default_rng(5)
    phi = QuadraticDifferential(sextic, [0.3, -1j, 2])
    A = system_with_det(phi, rng)
    assert np.allclose(det_map(A).coeffs, phi.coeffs, atol=1e-10)


def test_model_loop_is_wkb():
    curve, psi, loop = model_wkb_setup()
    ok, margin = is_wkb_curve(psi, loop)
    assert ok and margin > 0.1
    # near the cut psi ~ -dx^2 / (x^2 - 1/4); on |x| = 0.75 the correction
    # factor 16 / (16 - x^4) is within 2.1% of 1
    th = np.linspace(0, 2 * np.pi, 200_001)
    x = 0.75 * np.exp(1j * th)
    dens = np.abs((1j / np.sqrt(x**2 - 0.25) * 1j * x).real)
    approx = np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(th))
    assert width(psi, loop) == pytest.approx(approx, rel=0.03)


def test_sweep_rows_and_monotone_grid():
    curve, psi, loop = model_wkb_setup()
    A = system_with_det(psi.scaled(-1), np.random.default_rng(0))
    sw = sweep(curve, A, loop, [2, 4, 6, 8, 10])
    rows = list(sw.rows("c"))
    assert [r["t"] for r in rows] == [2, 4, 6, 8, 10] and rows[0]["loop_id"] == "c"
    with pytest.raises(ValueError):
        sweep(curve, A, loop, [2, 1, 3, 4])


def test_slope_bounded_by_width_random_loop(sextic):
    # inequality on an arbitrary loop, moderate t
    rng = np.random.default_rng(11)
    psi = QuadraticDifferential(sextic, [1, 0.5, -0.3j])
    A = system_with_det(psi.scaled(-1), rng)
    loop = circle_path(0.2 - 0.1j, 1.9)
    w = width(psi, loop)
    sw = sweep(sextic, A, loop, np.linspace(2, 10, 9))
    assert check_upper_bound(sw, w, 0.02)


def test_relative_error_definition():
    class S:
        slope = 9.0
    assert relative_error(S, 10.0) == pytest.approx(0.1)
    assert math.isfinite(relative_error(S, 1.0))
