"""Renormalized propagation of 2x2 linear systems F' = K(u) F on [0, 1].

Step propagators come from the sixth-order Magnus integrator with three
Gauss-Legendre nodes (Blanes, Casas & Ros).  Local error is controlled by
step doubling; all steps of a refinement sweep are evaluated at once.
Products are accumulated as (matrix with max-entry ~ 1, log scale) pairs so
that growth like exp(700) and beyond stays representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepUnderflow

_EPS = np.finfo(float).eps
_C1 = 0.5 - math.sqrt(15) / 10
_C3 = 0.5 + math.sqrt(15) / 10


@dataclass(frozen=True, eq=False)
class RenormalizedMatrix:
    """The matrix ``exp(log_scale) * m``."""

    m: np.ndarray
    log_scale: float

    @classmethod
    def identity(cls) -> "RenormalizedMatrix":
        return cls(np.eye(2, dtype=complex), 0.0)

    @classmethod
    def from_array(cls, a, log_scale: float = 0.0) -> "RenormalizedMatrix":
        a = np.asarray(a, dtype=complex)
        s = np.abs(a).max()
        if s == 0:
            return cls(a.copy(), -np.inf)
        return cls(a / s, log_scale + math.log(s))

    def __matmul__(self, other: "RenormalizedMatrix") -> "RenormalizedMatrix":
        return RenormalizedMatrix.from_array(self.m @ other.m, self.log_scale + other.log_scale)

    @property
    def max_entry(self) -> float:
        return float(np.abs(self.m).max())

    def to_array(self) -> np.ndarray:
        return self.m * math.exp(self.log_scale)

    def trace(self) -> complex:
        return complex(np.trace(self.m))

    def inverse(self) -> "RenormalizedMatrix":
        det = self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0]
        adj = np.array([[self.m[1, 1], -self.m[0, 1]], [-self.m[1, 0], self.m[0, 0]]])
        if self.is_unimodular(1e-8):
            # inverse of a unimodular matrix is its adjugate
            return RenormalizedMatrix.from_array(adj, self.log_scale)
        return RenormalizedMatrix.from_array(adj / det, -self.log_scale)

    def det_residual(self) -> tuple[float, float]:
        """(2*log_scale + log|det m|, arg det m); both vanish for det = 1."""
        d = complex(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])
        if d == 0:
            return math.inf, 0.0
        return 2 * self.log_scale + math.log(abs(d)), math.atan2(d.imag, d.real)

    def is_unimodular(self, tol: float = 1e-8) -> bool:
        r, a = self.det_residual()
        return abs(r) <= tol and abs(a) <= tol

    def project_unimodular(self) -> "RenormalizedMatrix":
        """Reset the smaller singular value so that det = 1 exactly.

        For strongly growing transports the small singular value sits below
        roundoff of the normalized matrix, so this only replaces noise.
        """
        u, s, vh = np.linalg.svd(self.m)
        phase = np.linalg.det(u) * np.linalg.det(vh)
        target = math.exp(-2 * self.log_scale)
        s2 = target / s[0] / phase
        m = u @ np.diag([s[0], s2]) @ vh
        return RenormalizedMatrix.from_array(m, self.log_scale)


def expm2(omega: np.ndarray) -> np.ndarray:
    """Closed-form exponential of a stack of 2x2 matrices (..., 2, 2)."""
    tau = 0.5 * (omega[..., 0, 0] + omega[..., 1, 1])
    a = omega[..., 0, 0] - tau
    d2 = a * a + omega[..., 0, 1] * omega[..., 1, 0]
    d = np.sqrt(d2)
    small = np.abs(d) < 1e-4
    # overflowing trial steps produce inf/nan and are rejected by the caller
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        sinhc = np.where(small, 1 + d2 / 6 + d2 * d2 / 120, np.sinh(d) / np.where(small, 1, d))
        ch = np.cosh(d)
        out = np.empty_like(omega)
        out[..., 0, 0] = ch + sinhc * a
        out[..., 1, 1] = ch - sinhc * a
        out[..., 0, 1] = sinhc * omega[..., 0, 1]
        out[..., 1, 0] = sinhc * omega[..., 1, 0]
        return out * np.exp(tau)[..., None, None]


def _comm(x, y):
    return x @ y - y @ x


def magnus6(coef, u0: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Sixth-order Magnus exponent for steps [u0, u0 + h]."""
    hh = h[:, None, None]
    a1m = coef(u0 + _C1 * h)
    a2m = coef(u0 + 0.5 * h)
    a3m = coef(u0 + _C3 * h)
    al1 = hh * a2m
    al2 = (math.sqrt(15) / 3) * hh * (a3m - a1m)
    al3 = (10.0 / 3) * hh * (a3m - 2 * a2m + a1m)
    c1 = _comm(al1, al2)
    c2 = -_comm(al1, 2 * al3 + c1) / 60
    return al1 + al3 / 12 + _comm(-20 * al1 - al3 + c1, al2 + c2) / 240


def _normalize(p: np.ndarray, logs: np.ndarray):
    s = np.abs(p).max(axis=(1, 2))
    s = np.where(s == 0, 1.0, s)
    return p / s[:, None, None], logs + np.log(s)


def tree_product(props: np.ndarray, logs: np.ndarray | None = None) -> RenormalizedMatrix:
    """Ordered product props[n-1] @ ... @ props[0] with per-level renormalization."""
    p = np.asarray(props, dtype=complex)
    lg = np.zeros(len(p)) if logs is None else np.asarray(logs, dtype=float)
    if len(p) == 0:
        return RenormalizedMatrix.identity()
    p, lg = _normalize(p, lg)
    while len(p) > 1:
        if len(p) % 2:
            p = np.concatenate([p, np.eye(2, dtype=complex)[None]])
            lg = np.concatenate([lg, [0.0]])
        p, lg = _normalize(p[1::2] @ p[0::2], lg[1::2] + lg[0::2])
    return RenormalizedMatrix(p[0], float(lg[0]))


@dataclass
class PropagationInfo:
    steps: int = 0
    rejected: int = 0
    est_error: float = 0.0
    min_step: float = math.inf


def propagate(coef, tol: float = 1e-10, n_init: int = 16, h_min: float = 1e-13,
              info: PropagationInfo | None = None) -> RenormalizedMatrix:
    """Transport for F' = coef(u) F from u=0 to u=1.

    ``coef`` maps an array of parameters (n,) to matrices (n, 2, 2).  A step
    of length h is accepted when the step-doubling discrepancy, relative to
    the step propagator, is below ``tol * h`` (roundoff floor applies).
    Accepted steps use the doubled propagator with Richardson correction.
    """
    edges = np.linspace(0.0, 1.0, max(1, int(n_init)) + 1)
    u0 = edges[:-1]
    h = np.diff(edges)
    acc_u, acc_p = [], []
    err_total = 0.0
    rejected = 0
    while len(u0):
        full = expm2(magnus6(coef, u0, h))
        with np.errstate(invalid="ignore", over="ignore"):
            half = expm2(magnus6(coef, u0 + h / 2, h / 2)) @ expm2(magnus6(coef, u0, h / 2))
            scale = np.maximum(np.abs(half).max(axis=(1, 2)), 1.0)
            err = np.abs(full - half).max(axis=(1, 2)) / scale / 63
        err = np.where(np.isfinite(err), err, np.inf)
        ok = err <= np.maximum(tol * h, 64 * _EPS)
        if ok.any():
            acc_u.append(u0[ok])
            acc_p.append(half[ok] - (full[ok] - half[ok]) / 63)
            err_total += float(err[ok].sum())
        bad = ~ok
        if bad.any():
            rejected += int(bad.sum())
            hb = h[bad] / 2
            if hb.min() < h_min:
                raise StepUnderflow(f"step size fell below {h_min:g} near u={u0[bad][0]:.6f}")
            ub = u0[bad]
            u0 = np.concatenate([ub, ub + hb])
            h = np.concatenate([hb, hb])
        else:
            u0 = np.empty(0)
    us = np.concatenate(acc_u)
    ps = np.concatenate(acc_p)
    order = np.argsort(us)
    if info is not None:
        info.steps += len(us)
        info.rejected += rejected
        info.est_error += err_total
        info.min_step = min(info.min_step, float(np.diff(np.append(us[order], 1.0)).min()))
    return tree_product(ps[order])
