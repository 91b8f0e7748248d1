"""Fibers of the determinant map on sl2-systems modulo conjugation.

Write A = M1 omega_0 + M2 omega_1.  For non-nilpotent M1 every orbit has a
representative

    M1 = [[0, 1], [d1, 0]],   M2 = [[e, f], [g, -e]],   g = d1 f.

The first condition uses up conjugation up to the centralizer of M1, the
slice g = d1 f fixes that one-parameter group up to an element of order 2
acting by e -> -e, which is removed by requiring Im e >= 0 (and Re e >= 0
when Im e = 0).  In these coordinates

    det(A) = (-d1, -2 d1 f, -(e^2 + d1 f^2))

and the fiber equations are solved by damped Newton iteration.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .curve import HyperellipticCurve, complex_pair
from .differentials import QuadraticDifferential, SlTwoSystem, det_map
from .errors import DegenerateConfiguration, NoConvergence


@dataclass(frozen=True)
class GaugeFixedSystem:
    d1: complex
    e: complex
    f: complex
    g: complex

    @property
    def z(self) -> np.ndarray:
        return np.array([self.d1, self.e, self.f], dtype=complex)

    @classmethod
    def from_z(cls, z) -> "GaugeFixedSystem":
        d1, e, f = (complex(v) for v in z)
        return cls(d1, e, f, d1 * f).canonical()

    def canonical(self) -> "GaugeFixedSystem":
        e = self.e
        # imaginary parts at roundoff level count as zero
        im = e.imag if abs(e.imag) > 1e-12 * abs(e) else 0.0
        if im < 0 or (im == 0 and e.real < 0):
            e = -e
        return GaugeFixedSystem(self.d1, e, self.f, self.g)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        m1 = np.array([[0, 1], [self.d1, 0]], dtype=complex)
        m2 = np.array([[self.e, self.f], [self.g, -self.e]], dtype=complex)
        return m1, m2

    def to_system(self, curve: HyperellipticCurve) -> SlTwoSystem:
        return SlTwoSystem.from_matrices(curve, *self.matrices())

    def det_coeffs(self) -> np.ndarray:
        m1, m2 = self.matrices()
        return np.array([-0.5 * np.trace(m1 @ m1), -np.trace(m1 @ m2), -0.5 * np.trace(m2 @ m2)])

    def distance(self, other: "GaugeFixedSystem") -> float:
        return float(np.abs(self.z - other.z).max())

    def to_dict(self) -> dict:
        return {k: complex_pair(getattr(self, k)) for k in ("d1", "e", "f", "g")}


def _residual(z: np.ndarray, q: np.ndarray) -> np.ndarray:
    d1, e, f = z
    return np.array([-d1, -2 * d1 * f, -(e * e + d1 * f * f)]) - q


def _jacobian(z: np.ndarray) -> np.ndarray:
    d1, e, f = z
    return np.array([[-1, 0, 0], [-2 * f, 0, -2 * d1], [-f * f, -2 * e, -2 * d1 * f]], dtype=complex)


def gauge_fix(A: SlTwoSystem) -> GaugeFixedSystem:
    """Normal-form representative of the conjugation orbit of A."""
    m1, m2 = A.matrices()
    d1 = m1[0, 0] ** 2 + m1[0, 1] * m1[1, 0]  # M1^2 = d1 I
    if abs(d1) < 1e-14 * max(1.0, np.abs(m1).max() ** 2):
        raise DegenerateConfiguration("M1 is nilpotent; the normal form needs det(A) nonzero at x = 0")
    # basis (M1 w, w) brings M1 to [[0, 1], [d1, 0]]
    for w in (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex),
              np.array([1, 1], dtype=complex), np.array([1, -1], dtype=complex)):
        P = np.column_stack([m1 @ w, w])
        dp = np.linalg.det(P)
        if abs(dp) > 1e-8 * max(1.0, np.abs(P).max() ** 2):
            break
    P = P / cmath.sqrt(dp)
    Pi = np.linalg.inv(P)
    n2 = Pi @ m2 @ P
    e, f, g = n2[0, 0], n2[0, 1], n2[1, 0]
    delta = g - d1 * f
    sd = cmath.sqrt(d1)
    if abs(delta) > 0:
        ratio = -delta / (2 * sd * e) if e != 0 else np.inf
        if not np.isfinite(ratio) or abs(ratio * ratio - 1) < 1e-14:
            raise DegenerateConfiguration("orbit misses the slice (det(A) has a double zero)")
        tau = 0.5 * cmath.atanh(ratio)
        a = cmath.cosh(tau)
        b = cmath.sinh(tau) / sd
        N = np.array([[0, 1], [d1, 0]], dtype=complex)
        s = a * np.eye(2) + b * N
        si = a * np.eye(2) - b * N
        n2 = s @ n2 @ si
        e, f, g = n2[0, 0], n2[0, 1], n2[1, 0]
    return GaugeFixedSystem(complex(d1), complex(e), complex(f), complex(d1 * f)).canonical()


def closed_form_fiber(q) -> list[GaugeFixedSystem]:
    """Solutions of the normal-form equations, written out explicitly."""
    q0, q1, q2 = (complex(v) for v in q)
    if q0 == 0:
        raise DegenerateConfiguration("q(0) = 0: the normal form does not apply")
    d1 = -q0
    f = q1 / (2 * q0)
    e = cmath.sqrt((q1 * q1 - 4 * q0 * q2) / (4 * q0))
    return [GaugeFixedSystem(d1, e, f, d1 * f).canonical()]


def newton(z0, q, tol: float = 1e-12, max_iter: int = 60) -> tuple[np.ndarray, int, bool]:
    """Damped Newton on the normal-form equations; returns (z, steps, converged)."""
    z = np.array(z0, dtype=complex)
    qn = max(1.0, float(np.abs(q).max()))
    r = _residual(z, q)
    for it in range(max_iter):
        rn = float(np.abs(r).max())
        if rn <= tol * qn:
            return z, it, True
        J = _jacobian(z)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            zn = z + lam * step
            rnew = _residual(zn, q)
            if np.abs(rnew).max() < (1 - 1e-4 * lam) * rn:
                break
            lam *= 0.5
        z, r = zn, rnew
    return z, max_iter, float(np.abs(r).max()) <= tol * qn


@dataclass
class FiberReport:
    target: np.ndarray
    solutions: list
    residuals: list
    starts_used: int
    degree_estimate: int
    ramification_suspect: bool = False
    jacobian_conditions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"target": [complex_pair(v) for v in self.target],
                "solutions": [s.to_dict() for s in self.solutions],
                "residuals": self.residuals, "starts_used": self.starts_used,
                "degree_estimate": self.degree_estimate,
                "ramification_suspect": self.ramification_suspect,
                "jacobian_conditions": self.jacobian_conditions}


def _random_start(rng: np.random.Generator, scale: float) -> np.ndarray:
    """Random system, randomly conjugated, then brought to normal form."""
    while True:
        m = scale * (rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2)))
        m1 = m[0] - 0.5 * np.trace(m[0]) * np.eye(2)
        m2 = m[1] - 0.5 * np.trace(m[1]) * np.eye(2)
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        g = g / cmath.sqrt(np.linalg.det(g))
        gi = np.linalg.inv(g)
        m1, m2 = g @ m1 @ gi, g @ m2 @ gi
        c = np.array([[m1[0, 0], m2[0, 0]], [m1[0, 1], m2[0, 1]], [m1[1, 0], m2[1, 0]]])
        try:
            return gauge_fix(SlTwoSystem(None, c)).z
        except DegenerateConfiguration:
            continue


def solve_fiber(curve: HyperellipticCurve, phi: QuadraticDifferential, n_starts: int = 200, seed: int = 0,
                tol: float = 1e-12, dedup: float = 1e-6, singular_cond: float = 1e5) -> FiberReport:
    """All normal-form systems A with det(A) = phi reached from ``n_starts``
    random starts.  A near-singular Jacobian at a solution marks phi as a
    ramification suspect instead of failing.

    Newton only reaches a singular root to about sqrt(tol), so solutions
    are merged within max(dedup, 10 sqrt(tol))."""
    q = np.asarray(phi.coeffs, dtype=complex)
    if not np.any(q):
        raise ValueError("phi must be nonzero")
    if abs(q[0]) < 1e-14 * max(1.0, np.abs(q).max()):
        raise DegenerateConfiguration("q(0) = 0: the normal form does not apply")
    rng = np.random.default_rng(seed)
    scale = math.sqrt(max(float(np.abs(q).max()), 1e-12))
    sols: list[GaugeFixedSystem] = []
    merge = max(dedup, 10 * math.sqrt(tol))
    for _ in range(n_starts):
        z, _, ok = newton(_random_start(rng, scale), q, tol=tol)
        if not ok:
            continue
        s = GaugeFixedSystem.from_z(z)
        if all(s.distance(o) > merge * max(1.0, float(np.abs(o.z).max())) for o in sols):
            sols.append(s)
    if not sols:
        raise NoConvergence(f"none of {n_starts} starts converged")
    sols.sort(key=lambda s: tuple(np.round(np.concatenate([s.z.real, s.z.imag]), 8)))
    qn = max(1.0, float(np.abs(q).max()))
    residuals = [float(np.abs(_residual(s.z, q)).max()) / qn for s in sols]
    conds = [float(np.linalg.cond(_jacobian(s.z))) for s in sols]
    suspect = any(c > singular_cond for c in conds)
    return FiberReport(q, sols, residuals, n_starts, len(sols), suspect, conds)


def regular_probe(curve: HyperellipticCurve, phi: QuadraticDifferential, radius: float = 1e-2,
                  n_probe: int = 8, seed: int = 0, n_starts: int = 50, max_steps: int = 20) -> bool:
    """Local triviality test of the fiber count around phi.

    At each probe point the fiber is solved afresh, and every base solution
    is continued there by Newton; the continuations must land on distinct
    solutions of the fresh solve.
    """
    base = solve_fiber(curve, phi, n_starts=n_starts, seed=seed)
    if base.ramification_suspect:
        return False
    if radius == 0:
        return True
    rng = np.random.default_rng(seed + 1)
    q = np.asarray(phi.coeffs)
    qn = float(np.linalg.norm(q))
    for k in range(n_probe):
        dq = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        qp = q + radius * qn * dq / np.linalg.norm(dq)
        other = solve_fiber(curve, QuadraticDifferential(phi.curve, qp), n_starts=n_starts, seed=seed + 2 + k)
        if other.degree_estimate != base.degree_estimate or other.ramification_suspect:
            return False
        hit = set()
        for s in base.solutions:
            z, _, ok = newton(s.z, qp, tol=1e-12, max_iter=max_steps)
            if not ok:
                return False
            moved = GaugeFixedSystem.from_z(z)
            j = int(np.argmin([moved.distance(o) for o in other.solutions]))
            if moved.distance(other.solutions[j]) > 1e-6 * max(1.0, float(np.abs(moved.z).max())):
                return False
            hit.add(j)
        if len(hit) != len(base.solutions):
            return False
    return True


def dilation_transport(A: GaugeFixedSystem, t: float) -> GaugeFixedSystem:
    """Normal form of sqrt(t) A: det scales by t."""
    if t <= 0:
        raise ValueError("t must be positive")
    r = math.sqrt(t)
    return GaugeFixedSystem(t * A.d1, r * A.e, A.f, t * A.g).canonical()


def double_zero_target(curve: HyperellipticCurve, q0: complex = 1.0, q2: complex = 1.0) -> QuadraticDifferential:
    """phi whose numerator q has a double zero (vanishing discriminant)."""
    q1 = 2 * cmath.sqrt(q0 * q2)
    return QuadraticDifferential(curve, [q0, q1, q2])
