"""Quadrature over the whole complex plane for integrands with integrable
point singularities (like 1/|x - e|) and kinks at a finite set of centers.

The plane is split by the inverse-distance (Shepard) partition of unity
phi_j = |x - c_j|^-P / sum_i |x - c_i|^-P with even P, which is smooth
everywhere.  Each piece is integrated in polar coordinates around its own
center, which absorbs that center's singularity; at the other centers the
piece vanishes to order P, so their singularities are harmless.  The
radial map r = L (s / (1 - s))^2 covers both small scales (a close pair of
centers) and the infinite tail in one grid, so no truncation radius is
needed for integrands decaying at least like |x|^-3.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import QuadratureNotConverged

SHEPARD_POWER = 8


def _h(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump(s):
    """Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf)."""
    s = np.asarray(s, dtype=float)
    a = _h(1.0 - s)
    b = _h(s - 0.5)
    return a / (a + b)


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def merge_centers(points, tol: float = 1e-9) -> np.ndarray:
    out: list[complex] = []
    for p in np.atleast_1d(np.asarray(points, dtype=complex)):
        if not np.isfinite(p):
            continue
        if all(abs(p - q) > tol * max(1.0, abs(q)) for q in out):
            out.append(complex(p))
    return np.array(out, dtype=complex)


def _panels(a: float, b: float, n_panels: int, n_gauss: int):
    xg, wg = _gauss(n_gauss)
    edges = np.linspace(a, b, n_panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi - lo) * xg[None, :] + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * wg[None, :]
    return x.ravel(), w.ravel()


def shepard_weights(x: np.ndarray, centers: np.ndarray, power: int = SHEPARD_POWER) -> np.ndarray:
    """Partition of unity, shape (len(centers), len(x))."""
    d = np.abs(x[None, :] - centers[:, None])
    ratio = d.min(axis=0)[None, :] / np.where(d > 0, d, 1.0)
    ratio = np.where(d > 0, ratio, 1.0)
    w = ratio**power
    return w / w.sum(axis=0)


def plane_rule(centers, level: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the integral of F(x) dA over C.

    The weights already contain the partition of unity, so the integral is
    ``sum(w * F(x))``.  Resolution doubles with each level.
    """
    c = merge_centers(centers)
    if len(c) == 0:
        c = np.array([0j])
    k = 2**level
    if len(c) == 1:
        scale = np.array([1.0])
    else:
        d = np.abs(c[:, None] - c[None, :])
        np.fill_diagonal(d, np.inf)
        scale = d.min(axis=1)
    s, ws = _panels(0.0, 1.0, 8 * k, 8)
    u = s / (1.0 - s)
    du = ws / (1.0 - s) ** 2
    nth = 16 * k
    eth = np.exp(2j * math.pi * (np.arange(nth) + 0.5) / nth)
    xs, wts = [], []
    for j, (cj, lj) in enumerate(zip(c, scale)):
        r = lj * u**2
        wr = 2 * lj * u * du * r * (2 * math.pi / nth)
        x = (cj + r[:, None] * eth[None, :]).ravel()
        w = np.repeat(wr, nth)
        w = w * shepard_weights(x, c)[j]
        keep = w > 0
        xs.append(x[keep])
        wts.append(w[keep])
    return np.concatenate(xs), np.concatenate(wts)


def integrate_plane(func, centers, tol: float = 1e-8, min_level: int = 2, max_level: int = 5,
                    return_error: bool = False):
    """Integrate ``func`` (vectorized, complex or real) over C.

    Levels are doubled until two successive results agree to ``tol``
    (relative, with an absolute floor of tol * 1e-3).
    """
    prev = None
    for level in range(min_level, max_level + 1):
        x, w = plane_rule(centers, level)
        val = np.sum(w * func(x))
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(abs(val), 1e-3):
                return (val, err) if return_error else val
        prev = val
    raise QuadratureNotConverged(f"plane quadrature did not reach tol={tol:g} by level {max_level}")
