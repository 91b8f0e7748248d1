"""Abelian and quadratic differentials on a genus-2 curve, sl2-systems and the
determinant map, plus the integrals built from quadratic differentials:
the L1 norm, widths of paths, the Beltrami pairing and the dual (Finsler)
norm of a Teichmueller-form Beltrami differential.

Bases: omega_k = x^k dx/y (k = 0, 1) and x^k dx^2/y^2 (k = 0, 1, 2).
Coefficients are stored lowest degree first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .curve import HyperellipticCurve, PathOnCurve, complex_pair, as_complex
from .errors import ZeroOnPath
from .quadrature import integrate_plane, plane_rule


def _poly_mul(a, b) -> np.ndarray:
    """Product of ascending coefficient vectors."""
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _ascending_eval(c, x):
    return np.polynomial.polynomial.polyval(x, np.asarray(c, dtype=complex))


@dataclass(frozen=True, eq=False)
class AbelianDifferential:
    curve: HyperellipticCurve
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if c.shape != (2,):
            raise ValueError("an Abelian differential on a genus-2 curve has 2 coefficients")
        object.__setattr__(self, "coeffs", c)

    def numerator(self, x):
        return _ascending_eval(self.coeffs, x)


@dataclass(frozen=True, eq=False)
class QuadraticDifferential:
    curve: HyperellipticCurve
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if c.shape != (3,):
            raise ValueError("a quadratic differential on a genus-2 curve has 3 coefficients")
        object.__setattr__(self, "coeffs", c)

    def numerator(self, x):
        return _ascending_eval(self.coeffs, x)

    def zeros(self) -> np.ndarray:
        """Zeros of the numerator q(x) in the finite x-plane."""
        c = np.trim_zeros(self.coeffs, "b")
        if len(c) <= 1:
            return np.empty(0, dtype=complex)
        return np.polynomial.polynomial.polyroots(c).astype(complex)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def scaled(self, t: complex) -> "QuadraticDifferential":
        return QuadraticDifferential(self.curve, t * self.coeffs)

    def __add__(self, other: "QuadraticDifferential") -> "QuadraticDifferential":
        return QuadraticDifferential(self.curve, self.coeffs + other.coeffs)

    def __sub__(self, other: "QuadraticDifferential") -> "QuadraticDifferential":
        return QuadraticDifferential(self.curve, self.coeffs - other.coeffs)

    def to_list(self) -> list:
        return [complex_pair(c) for c in self.coeffs]


@dataclass(frozen=True, eq=False)
class SlTwoSystem:
    """A = [[alpha, beta], [gamma, -alpha]]; ``coeffs`` has rows alpha, beta, gamma."""

    curve: HyperellipticCurve
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (3, 2):
            raise ValueError("sl2-system coefficients must have shape (3, 2)")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_forms(cls, alpha: AbelianDifferential, beta: AbelianDifferential,
                   gamma: AbelianDifferential) -> "SlTwoSystem":
        return cls(alpha.curve, np.array([alpha.coeffs, beta.coeffs, gamma.coeffs]))

    @classmethod
    def from_matrices(cls, curve: HyperellipticCurve, m1, m2) -> "SlTwoSystem":
        """A = M1 * omega_0 + M2 * omega_1 with traceless 2x2 matrices."""
        m1 = np.asarray(m1, dtype=complex)
        m2 = np.asarray(m2, dtype=complex)
        return cls(curve, np.array([[m1[0, 0], m2[0, 0]], [m1[0, 1], m2[0, 1]], [m1[1, 0], m2[1, 0]]]))

    @property
    def alpha(self) -> AbelianDifferential:
        return AbelianDifferential(self.curve, self.coeffs[0])

    @property
    def beta(self) -> AbelianDifferential:
        return AbelianDifferential(self.curve, self.coeffs[1])

    @property
    def gamma(self) -> AbelianDifferential:
        return AbelianDifferential(self.curve, self.coeffs[2])

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        a, b, c = self.coeffs
        m1 = np.array([[a[0], b[0]], [c[0], -a[0]]])
        m2 = np.array([[a[1], b[1]], [c[1], -a[1]]])
        return m1, m2

    def numerator_matrix(self, x) -> np.ndarray:
        """Stack of matrices N(x) with A = N(x) dx / y, shape (..., 2, 2)."""
        x = np.asarray(x, dtype=complex)
        a, b, c = (_ascending_eval(r, x) for r in self.coeffs)
        return np.stack([np.stack([a, b], -1), np.stack([c, -a], -1)], -2)

    def conjugate(self, g) -> "SlTwoSystem":
        """g A g^-1."""
        g = np.asarray(g, dtype=complex)
        gi = np.linalg.inv(g)
        m1, m2 = self.matrices()
        return SlTwoSystem.from_matrices(self.curve, g @ m1 @ gi, g @ m2 @ gi)

    def scaled(self, t: complex) -> "SlTwoSystem":
        return SlTwoSystem(self.curve, t * self.coeffs)

    def __add__(self, other: "SlTwoSystem") -> "SlTwoSystem":
        return SlTwoSystem(self.curve, self.coeffs + other.coeffs)

    def to_dict(self) -> dict:
        return {name: [complex_pair(v) for v in row]
                for name, row in zip(("alpha", "beta", "gamma"), self.coeffs)}

    @classmethod
    def from_dict(cls, curve: HyperellipticCurve, d: dict) -> "SlTwoSystem":
        rows = [[as_complex(v) for v in d[k]] for k in ("alpha", "beta", "gamma")]
        return cls(curve, np.array(rows))


def zero_system(curve: HyperellipticCurve) -> SlTwoSystem:
    return SlTwoSystem(curve, np.zeros((3, 2), dtype=complex))


def random_system(curve: HyperellipticCurve, rng: np.random.Generator) -> SlTwoSystem:
    z = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    return SlTwoSystem(curve, z)


# ---------------------------------------------------------------------------
# determinant map


def det_map(A: SlTwoSystem) -> QuadraticDifferential:
    a, b, c = A.coeffs
    return QuadraticDifferential(A.curve, -_poly_mul(a, a) - _poly_mul(b, c))


def d_det(A: SlTwoSystem, Phi: SlTwoSystem) -> QuadraticDifferential:
    """Derivative of det at A in direction Phi, i.e. -tr(A Phi)."""
    a, b, c = A.coeffs
    p1, p2, p3 = Phi.coeffs
    return QuadraticDifferential(A.curve, -2 * _poly_mul(a, p1) - _poly_mul(c, p2) - _poly_mul(b, p3))


def noether_rank(A: SlTwoSystem, tol: float = 1e-10) -> int:
    """Rank of (phi1, phi2, phi3) -> alpha phi1 + beta phi2 + gamma phi3 into QD."""
    cols = []
    for form in A.coeffs:
        for basis in ((1, 0), (0, 1)):
            cols.append(_poly_mul(form, basis))
    m = np.array(cols).T
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


# ---------------------------------------------------------------------------
# integrals over the curve


def _centers(curve: HyperellipticCurve, *qs: QuadraticDifferential) -> np.ndarray:
    pts = [curve.branch_points]
    pts.extend(q.zeros() for q in qs)
    return np.concatenate(pts)


def qd_norm(phi: QuadraticDifferential, tol: float = 1e-8, return_error: bool = False):
    """Integral of |phi| over the curve (both sheets of the x-plane)."""
    if phi.is_zero():
        return (0.0, 0.0) if return_error else 0.0
    curve = phi.curve

    def f(x):
        return 2.0 * np.abs(phi.numerator(x)) / np.abs(curve.p(x))

    val, err = integrate_plane(f, _centers(curve, phi), tol=tol, return_error=True)
    return (float(val.real), float(err)) if return_error else float(val.real)


@dataclass(frozen=True, eq=False)
class BeltramiRepresentative:
    """mu = k * conj(q) / |q| in Teichmueller form."""

    q: QuadraticDifferential
    k: float

    def __post_init__(self):
        if not 0.0 <= self.k < 1.0:
            raise ValueError("k must lie in [0, 1)")
        if self.q.is_zero():
            raise ValueError("q must be nonzero")


def _belt_density(mu: BeltramiRepresentative, x):
    q = mu.q.numerator(x)
    return 2.0 * mu.k * np.conj(q) / (np.abs(q) * np.abs(mu.q.curve.p(x)))


def belt_pairing(mu: BeltramiRepresentative, phi: QuadraticDifferential, tol: float = 1e-8) -> complex:
    if mu.k == 0 or phi.is_zero():
        return 0j
    dens = lambda x: _belt_density(mu, x) * phi.numerator(x)
    return complex(integrate_plane(dens, _centers(mu.q.curve, mu.q, phi), tol=tol))


def _sphere_points(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    return z / np.linalg.norm(z, axis=1)[:, None]


def teich_norm(mu: BeltramiRepresentative, n_grid: int = 200, level: int = 3, seed: int = 0,
               refine: bool = True, tol: float = 1e-7) -> float:
    """sup over phi != 0 of |<mu, phi>| / ||phi||.

    A coarse random grid on the unit sphere of QD (complex dimension 3) is
    evaluated with one fixed node set; the best point is then refined by a
    local Nelder-Mead search using the fully adaptive norm.
    """
    if mu.k == 0:
        return 0.0
    curve = mu.q.curve
    x, w = plane_rule(_centers(curve, mu.q), level)
    dens = w * _belt_density(mu, x)
    pair_basis = np.array([np.sum(dens * x**j) for j in range(3)])
    inv_p = 2.0 * w / np.abs(curve.p(x))
    vander = np.stack([np.ones_like(x), x, x * x], 0)

    rng = np.random.default_rng(seed)
    cands = _sphere_points(n_grid, rng)
    cands = np.vstack([cands, mu.q.coeffs / np.linalg.norm(mu.q.coeffs), np.eye(3)])
    norms = (np.abs(cands @ vander) * inv_p[None, :]).sum(axis=1)
    ratios = np.abs(cands @ pair_basis) / norms
    best = cands[int(np.argmax(ratios))]
    if not refine:
        return float(ratios.max())

    def neg_ratio(v):
        c = v[:3] + 1j * v[3:]
        if not np.any(c):
            return 0.0
        phi = QuadraticDifferential(curve, c)
        return -abs(belt_pairing(mu, phi, tol=tol)) / qd_norm(phi, tol=tol)

    v0 = np.concatenate([best.real, best.imag])
    res = optimize.minimize(neg_ratio, v0, method="Nelder-Mead",
                            options={"xatol": 1e-4, "fatol": 1e-9, "maxiter": 400})
    return float(max(-res.fun, -neg_ratio(v0)))


# ---------------------------------------------------------------------------
# widths


def _root_density(phi: QuadraticDifferential, seg, u):
    x = seg.point(u)
    return np.sqrt(phi.numerator(x) / phi.curve.p(x)) * seg.deriv(u)


def _aligned(vals: np.ndarray, ref: complex) -> np.ndarray:
    return np.where((vals * np.conj(ref)).real >= 0, vals, -vals)


def segment_width(density, n_scan: int = 256, epsabs: float = 1e-13) -> float:
    """Integral over [0, 1] of |Re density(u)| for a density known up to sign.

    The sign is made continuous by nearest-root tracking between scan
    nodes; zeros of the real part are then located by Brent's method and
    each sign-definite piece is integrated adaptively.
    """
    u = np.linspace(0.0, 1.0, n_scan + 1)
    vals = density(u)
    for j in range(1, len(vals)):
        vals[j] = _aligned(vals[j], vals[j - 1])
    re = vals.real
    cuts = [0.0]
    for j in range(n_scan):
        if re[j] == 0.0 and j > 0:
            cuts.append(u[j])
        elif re[j] * re[j + 1] < 0:
            ref = vals[j]
            g = lambda s, ref=ref: float(_aligned(density(np.array([s]))[0], ref).real)
            cuts.append(optimize.brentq(g, u[j], u[j + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    cuts.append(1.0)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        ref_u = 0.5 * (a + b)
        j = min(int(ref_u * n_scan), n_scan)
        ref = vals[j]

        def piece(s, ref=ref):
            return abs(float(_aligned(density(np.array([s]))[0], ref).real))

        val, _ = integrate.quad(piece, a, b, epsabs=epsabs, epsrel=1e-12, limit=200)
        total += val
    return total


def check_path_avoids_zeros(phi: QuadraticDifferential, path: PathOnCurve, tol: float = 1e-6) -> None:
    z = phi.zeros()
    if len(z) and path.clearance(z) < tol:
        raise ZeroOnPath(f"path passes within {path.clearance(z):.2e} of a zero of phi")
    if phi.is_zero():
        raise ZeroOnPath("phi vanishes identically")


def width(phi: QuadraticDifferential, path: PathOnCurve, tol: float = 1e-6) -> float:
    """Integral along the path of |Re(sqrt(phi))|; independent of the branch."""
    check_path_avoids_zeros(phi, path, tol)
    if path.clearance(phi.curve.branch_points) < tol:
        from .errors import PathTooClose
        raise PathTooClose("path passes through a branch point")
    return float(sum(segment_width(lambda u, s=s: _root_density(phi, s, u)) for s in path.segments))


def transversality_margin(phi: QuadraticDifferential, path: PathOnCurve, n: int = 2048,
                          tol: float = 1e-6) -> float:
    """min over the path of |Re(sqrt(phi) x')| / |sqrt(phi) x'|."""
    check_path_avoids_zeros(phi, path, tol)
    out = math.inf
    u = (np.arange(n) + 0.5) / n
    for seg in path.segments:
        d = _root_density(phi, seg, u)
        out = min(out, float((np.abs(d.real) / np.abs(d)).min()))
        # refine around the minimum
        j = int(np.argmin(np.abs(d.real) / np.abs(d)))
        f = lambda s: float(abs(_root_density(phi, seg, np.array([s]))[0].real)
                            / abs(_root_density(phi, seg, np.array([s]))[0]))
        lo, hi = max(0.0, u[j] - 1.0 / n), min(1.0, u[j] + 1.0 / n)
        r = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        out = min(out, float(r.fun))
    return out
