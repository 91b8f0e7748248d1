"""Genus-2 hyperelliptic curves y^2 = p(x), piecewise paths in the x-plane
with continuous tracking of the branch of y, and a standard generating set
of the surface group built from lassos around branch points.

Polynomial coefficients are stored highest degree first (numpy order).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadDegree, DegenerateConfiguration, PathTooClose, RepeatedRoots

RELATION_WORD = ("a1", "b1", "a1^-1", "b1^-1", "a2", "b2", "a2^-1", "b2^-1")


def as_complex(value) -> complex:
    """Accept a number or an ``[re, im]`` pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pair must have two entries, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def complex_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


@dataclass(frozen=True, eq=False)
class HyperellipticCurve:
    p_coeffs: np.ndarray
    branch_points: np.ndarray
    separation: float
    genus: int = 2

    @property
    def degree(self) -> int:
        return len(self.p_coeffs) - 1

    def p(self, x):
        # product form keeps full relative accuracy near the branch points
        x = np.asarray(x, dtype=complex)
        out = np.full(x.shape, self.p_coeffs[0], dtype=complex)
        for e in self.branch_points:
            out = out * (x - e)
        return out

    def dp(self, x):
        return np.polyval(np.polyder(self.p_coeffs), x)

    def y_principal(self, x):
        return np.sqrt(np.asarray(self.p(x), dtype=complex))

    def to_dict(self) -> dict:
        return {"p_coeffs": [complex_pair(c) for c in self.p_coeffs]}


def _polish_roots(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    d = np.polyder(coeffs)
    r = roots.copy()
    for _ in range(steps):
        dv = np.polyval(d, r)
        ok = np.abs(dv) > 0
        r[ok] = r[ok] - np.polyval(coeffs, r[ok]) / dv[ok]
    return r


def make_curve(p_coeffs: Sequence, tol: float = 1e-6) -> HyperellipticCurve:
    if tol <= 0:
        raise ValueError("tol must be positive")
    coeffs = np.array([as_complex(c) for c in p_coeffs], dtype=complex)
    nz = np.flatnonzero(coeffs != 0)
    if len(nz) == 0:
        raise BadDegree("p is identically zero")
    coeffs = coeffs[nz[0]:]
    deg = len(coeffs) - 1
    if deg not in (5, 6):
        raise BadDegree(f"genus 2 needs deg p in (5, 6), got {deg}")

    roots = np.roots(coeffs)
    if len(roots) != deg:
        raise RepeatedRoots("root finder lost roots (root at the origin of high order)")
    diffs = np.abs(roots[:, None] - roots[None, :]) + np.diag(np.full(deg, np.inf))
    sep = float(diffs.min())
    if sep < tol:
        raise RepeatedRoots(f"branch point separation {sep:.3e} below tolerance {tol:.1e}")
    roots = _polish_roots(coeffs, roots)
    diffs = np.abs(roots[:, None] - roots[None, :]) + np.diag(np.full(deg, np.inf))
    sep = float(diffs.min())

    rebuilt = coeffs[0] * np.poly(roots)
    scale = np.abs(coeffs).max()
    if np.abs(rebuilt - coeffs).max() > 1e-10 * scale * max(1.0, np.abs(roots).max() ** deg):
        raise RepeatedRoots("branch points do not reproduce p; roots ill-conditioned")
    order = np.lexsort((roots.imag, roots.real))
    return HyperellipticCurve(coeffs, roots[order], sep)


# ---------------------------------------------------------------------------
# path segments


@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex
    kind: str = field(default="line", init=False)

    def point(self, u):
        return self.z0 + np.asarray(u) * (self.z1 - self.z0)

    def deriv(self, u):
        return np.full(np.shape(u), self.z1 - self.z0, dtype=complex)

    @property
    def start(self) -> complex:
        return complex(self.z0)

    @property
    def end(self) -> complex:
        return complex(self.z1)

    @property
    def length(self) -> float:
        return abs(self.z1 - self.z0)

    def reversed(self) -> "Line":
        return Line(self.z1, self.z0)

    def split(self, u: float) -> tuple["Line", "Line"]:
        m = complex(self.point(u))
        return Line(self.z0, m), Line(m, self.z1)

    def distance_to(self, pt: complex) -> float:
        d = self.z1 - self.z0
        if d == 0:
            return abs(pt - self.z0)
        u = ((pt - self.z0) * np.conj(d)).real / abs(d) ** 2
        u = min(1.0, max(0.0, u))
        return abs(pt - (self.z0 + u * d))

    def to_dict(self) -> dict:
        return {"kind": "line", "z0": complex_pair(self.z0), "z1": complex_pair(self.z1)}


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius*exp(i*theta)``, theta running theta0 -> theta1."""

    center: complex
    radius: float
    theta0: float
    theta1: float
    kind: str = field(default="arc", init=False)

    def _theta(self, u):
        return self.theta0 + np.asarray(u) * (self.theta1 - self.theta0)

    def point(self, u):
        return self.center + self.radius * np.exp(1j * self._theta(u))

    def deriv(self, u):
        th = self._theta(u)
        return 1j * self.radius * (self.theta1 - self.theta0) * np.exp(1j * th)

    @property
    def start(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end(self) -> complex:
        return complex(self.point(1.0))

    @property
    def length(self) -> float:
        return abs(self.radius * (self.theta1 - self.theta0))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    def split(self, u: float) -> tuple["Arc", "Arc"]:
        tm = float(self._theta(u))
        return (Arc(self.center, self.radius, self.theta0, tm),
                Arc(self.center, self.radius, tm, self.theta1))

    def distance_to(self, pt: complex) -> float:
        rel = pt - self.center
        lo, hi = sorted((self.theta0, self.theta1))
        if hi - lo >= 2 * math.pi:
            return abs(abs(rel) - self.radius)
        ang = math.atan2(rel.imag, rel.real)
        # bring the angle into [lo, lo + 2pi)
        ang = lo + (ang - lo) % (2 * math.pi)
        if ang <= hi:
            return abs(abs(rel) - self.radius)
        return min(abs(pt - self.point(0.0)), abs(pt - self.point(1.0)))

    def to_dict(self) -> dict:
        return {"kind": "arc", "center": complex_pair(self.center), "radius": self.radius,
                "theta0": self.theta0, "theta1": self.theta1}


def segment_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "line":
        return Line(as_complex(d["z0"]), as_complex(d["z1"]))
    if kind == "arc":
        return Arc(as_complex(d["center"]), float(d["radius"]), float(d["theta0"]), float(d["theta1"]))
    raise ValueError(f"unknown segment kind {kind!r}")


@dataclass(frozen=True)
class PathOnCurve:
    segments: tuple
    start_sheet: int = 1
    closed: bool = False

    def __post_init__(self):
        if self.start_sheet not in (1, -1):
            raise ValueError("start_sheet must be +1 or -1")
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("a path needs at least one segment")

    @property
    def start(self) -> complex:
        return self.segments[0].start

    @property
    def end(self) -> complex:
        return self.segments[-1].end

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    def clearance(self, points) -> float:
        pts = np.atleast_1d(points)
        return min(seg.distance_to(complex(p)) for seg in self.segments for p in pts)

    def reversed(self, start_sheet: int | None = None) -> "PathOnCurve":
        sheet = self.start_sheet if start_sheet is None else start_sheet
        return PathOnCurve(tuple(s.reversed() for s in reversed(self.segments)), sheet, self.closed)

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments],
                "start_sheet": self.start_sheet, "closed": self.closed}

    @classmethod
    def from_dict(cls, d: dict) -> "PathOnCurve":
        return cls(tuple(segment_from_dict(s) for s in d["segments"]),
                   int(d.get("start_sheet", 1)), bool(d.get("closed", False)))


def concat(*paths: PathOnCurve, closed: bool = False) -> PathOnCurve:
    """Join paths end to start; the sheet of the result is the first path's."""
    segs = []
    for p in paths:
        if segs and abs(segs[-1].end - p.start) > 1e-12 * max(1.0, abs(p.start)):
            raise ValueError("paths do not join")
        segs.extend(p.segments)
    return PathOnCurve(tuple(segs), paths[0].start_sheet, closed)


def circle_path(center: complex, radius: float, start_angle: float = 0.0,
                turns: int = 1, start_sheet: int = 1) -> PathOnCurve:
    return PathOnCurve((Arc(center, radius, start_angle, start_angle + 2 * math.pi * turns),),
                       start_sheet, closed=True)


# ---------------------------------------------------------------------------
# sheet tracking


def _sign_chain(vals: np.ndarray, y0: complex) -> np.ndarray:
    """Flip signs of principal square roots so consecutive values stay close."""
    vals = vals.copy()
    first = 1.0 if (vals[0] * np.conj(y0)).real >= 0 else -1.0
    vals[0] *= first
    if len(vals) > 1:
        flips = np.where((vals[1:] * np.conj(vals[:-1])).real >= 0, 1.0, -1.0)
        vals[1:] *= np.cumprod(flips)
    return vals


class SheetTrack:
    """Continuous branch of y = sqrt(p(x)) along every segment of a path.

    Each segment is sampled until consecutive y-values differ by less than
    ``max_angle`` radians in argument; values between nodes are obtained by
    choosing the square root closest to the preceding node.
    """

    def __init__(self, curve: HyperellipticCurve, path: PathOnCurve,
                 max_angle: float = 0.3, min_nodes: int = 32, clearance_tol: float = 1e-9):
        clr = path.clearance(curve.branch_points)
        if clr < clearance_tol:
            raise PathTooClose(f"path passes within {clr:.2e} of a branch point")
        self.curve = curve
        self.path = path
        self.clearance = clr
        self.nodes: list[np.ndarray] = []
        self.values: list[np.ndarray] = []
        x0 = path.start
        y = complex(path.start_sheet * curve.y_principal(x0))
        for seg in path.segments:
            n = min_nodes
            while True:
                u = np.linspace(0.0, 1.0, n + 1)
                ys = _sign_chain(curve.y_principal(seg.point(u)), y)
                ang = np.abs(np.angle(ys[1:] / ys[:-1]))
                if ang.max() < max_angle:
                    break
                if n > 2**22:
                    raise PathTooClose("sheet tracking failed to resolve the path")
                n *= 2
            self.nodes.append(u)
            self.values.append(ys)
            y = complex(ys[-1])
        self.end_value = y

    def y_at(self, k: int, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        nodes, vals = self.nodes[k], self.values[k]
        idx = np.clip(np.searchsorted(nodes, u, side="right") - 1, 0, len(nodes) - 1)
        ref = vals[idx]
        s = self.curve.y_principal(self.path.segments[k].point(u))
        return np.where((s * np.conj(ref)).real >= 0, s, -s)

    def end_sheet(self) -> int:
        yp = complex(self.curve.y_principal(self.path.end))
        return 1 if (self.end_value * np.conj(yp)).real >= 0 else -1


def continue_sheet(curve: HyperellipticCurve, path: PathOnCurve, tol: float = 1e-9,
                   max_angle: float = 0.3) -> int:
    return SheetTrack(curve, path, max_angle=max_angle, clearance_tol=tol).end_sheet()


# ---------------------------------------------------------------------------
# surface group generators


@dataclass(frozen=True)
class SurfaceGroupGenerators:
    loops: tuple  # (a1, b1, a2, b2)
    base_point: complex
    radius: float
    lasso_order: tuple  # branch points in the order sigma_1, sigma_2, ...
    relation_word: tuple = RELATION_WORD

    def named(self) -> dict:
        return dict(zip(("a1", "b1", "a2", "b2"), self.loops))


def lasso(base: complex, center: complex, radius: float) -> PathOnCurve:
    """Straight tail from ``base`` to the circle around ``center``, one
    counter-clockwise turn, and back."""
    direction = (base - center) / abs(base - center)
    touch = center + radius * direction
    ang = math.atan2(direction.imag, direction.real)
    return PathOnCurve((Line(base, touch), Arc(center, radius, ang, ang + 2 * math.pi),
                        Line(touch, base)))


def _word_path(lassos: list[PathOnCurve], word: Sequence[int]) -> PathOnCurve:
    """Concatenate lassos; index j means sigma_j, -j its reverse (1-based)."""
    parts = [lassos[abs(j) - 1] if j > 0 else lassos[abs(j) - 1].reversed() for j in word]
    return concat(*parts, closed=len(word) % 2 == 0)


def default_base_point(curve: HyperellipticCurve) -> complex:
    e = curve.branch_points
    mid = e.mean()
    spread = np.abs(e - mid).max()
    return complex(mid - 1j * (spread + 1.0))


def _lassos_for(curve: HyperellipticCurve, x0: complex, rho: float):
    """Ordered lasso centres seen from x0 and the worst tail clearance."""
    e = curve.branch_points
    if np.abs(e - x0).min() <= 2 * rho:
        raise DegenerateConfiguration("base point too close to a branch point")
    ang = np.angle(e - x0)
    # angles relative to the direction of the centroid
    ref = np.angle(e.mean() - x0)
    rel = (ang - ref + math.pi) % (2 * math.pi) - math.pi
    if np.ptp(rel) >= math.pi - 1e-9:
        raise DegenerateConfiguration("branch points are not seen within a half-plane from the base point")
    order = np.argsort(rel)
    pts = e[order]
    if np.diff(rel[order]).min() < 1e-9:
        raise DegenerateConfiguration("two branch points are collinear with the base point; supply base_point")
    worst = math.inf
    for j, c in enumerate(pts):
        tail = Line(x0, c + rho * (x0 - c) / abs(x0 - c))
        others = np.delete(pts, j)
        worst = min(worst, min(tail.distance_to(complex(o)) for o in others))
    return pts, worst


def canonical_generators(curve: HyperellipticCurve, base_point: complex | None = None,
                         radius: float | None = None) -> SurfaceGroupGenerators:
    """Loops a1, b1, a2, b2 with a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1 = 1.

    With lassos sigma_j ordered by the angle under which the branch points
    are seen from the base point, sigma_1 ... sigma_6 is the loop around
    infinity (trivial on the curve for deg p = 6) and every sigma_j squares
    to the identity.  a1 = s1 s2, b1 = s3 s2, a2 = s4 s5, b2 = s6 s5 then
    satisfy the surface relation.  For deg p = 5, s6 is replaced by the
    inverse of s1 ... s5.

    Without an explicit base point, candidates on a circle around the
    branch points are tried and the one with the best tail clearance wins.
    """
    rho = curve.separation / 4 if radius is None else float(radius)
    if base_point is not None:
        x0 = complex(base_point)
        pts, worst = _lassos_for(curve, x0, rho)
    else:
        e = curve.branch_points
        mid = e.mean()
        big = np.abs(e - mid).max() + 1.0
        best = None
        for k in range(48):
            cand = complex(default_base_point(curve) - mid) * np.exp(2j * math.pi * k / 48) + mid
            cand = mid + (cand - mid) / abs(cand - mid) * big
            try:
                pts_k, w = _lassos_for(curve, cand, rho)
            except DegenerateConfiguration:
                continue
            if best is None or w > best[2] + 1e-12:
                best = (cand, pts_k, w)
        if best is None:
            raise DegenerateConfiguration("no admissible default base point; supply base_point")
        x0, pts, worst = best
    if worst < rho / 2:
        raise DegenerateConfiguration("a lasso tail passes too close to another branch point; "
                                      "supply base_point or radius")
    lassos = [lasso(x0, c, rho) for c in pts]
    if curve.degree == 6:
        words = ([1, 2], [3, 2], [4, 5], [6, 5])
    else:
        words = ([1, 2], [3, 2], [4, 5], [-5, -4, -3, -2, -1, 5])
    loops = tuple(_word_path(lassos, w) for w in words)
    return SurfaceGroupGenerators(loops, x0, rho, tuple(pts))


def lasso_word_loop(curve: HyperellipticCurve, gens: SurfaceGroupGenerators,
                    word: Sequence[int]) -> PathOnCurve:
    """Loop built from the same lassos as ``gens``; even words close up."""
    lassos = [lasso(gens.base_point, c, gens.radius) for c in gens.lasso_order]
    return _word_path(lassos, word)


def generator_word_loop(gens: SurfaceGroupGenerators, word: Sequence[str]) -> PathOnCurve:
    """Concatenate named generators, e.g. ``["a1", "b2^-1"]``."""
    named = gens.named()
    parts = []
    for w in word:
        if w.endswith("^-1"):
            parts.append(named[w[:-3]].reversed())
        else:
            parts.append(named[w])
    return concat(*parts, closed=True)
