"""Half-translation surfaces glued from polygons, straight-line flow in the
flat metric of phi = dz^2, Birkhoff averages, closing of long trajectories
by short horizontal inserts, and the search for closed curves whose
phi-width exceeds their psi-width.

Edge k of a polygon runs from vertex k to vertex k+1 (counter-clockwise).
A pairing glues edge (P, k) to edge (Q, l) by z -> z + c ("translation")
or z -> -z + c ("flip"); in both cases vertex k goes to vertex l+1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .curve import as_complex, complex_pair
from .differentials import segment_width
from .errors import (Disconnected, HitsConePoint, InputError, InsertTooSteep, MismatchedEdges,
                     NotCloseEnough, SearchExhausted)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        self.parent[self.find(i)] = self.find(j)


@dataclass(frozen=True)
class Pairing:
    poly_a: int
    edge_a: int
    poly_b: int
    edge_b: int
    kind: str = "translation"


@dataclass(frozen=True, eq=False)
class HalfTranslationSurface:
    polygons: tuple
    pairings: tuple
    cone_angles: tuple  # angles of vertex classes that differ from 2 pi
    vertex_classes: tuple  # (angle, members) for every class
    genus: int
    # glue[(P, k)] = (Q, l, sign, c): z -> sign * z + c
    glue: dict = field(repr=False)

    def edge(self, poly: int, k: int) -> tuple[complex, complex]:
        v = self.polygons[poly]
        return complex(v[k]), complex(v[(k + 1) % len(v)])

    def area(self) -> float:
        out = 0.0
        for v in self.polygons:
            out += 0.5 * float(np.sum((np.conj(v) * np.roll(v, -1)).imag))
        return out

    def contains(self, poly: int, z: complex, tol: float = 1e-12) -> bool:
        v = self.polygons[poly]
        e = np.roll(v, -1) - v
        cross = (np.conj(e) * (z - v)).imag
        return bool(np.all(cross >= -tol * max(1.0, float(np.abs(e).max()))))

    def to_dict(self) -> dict:
        return {"polygons": [[complex_pair(z) for z in v] for v in self.polygons],
                "pairings": [[p.poly_a, p.edge_a, p.poly_b, p.edge_b, p.kind] for p in self.pairings]}


def make_surface(spec: dict) -> HalfTranslationSurface:
    """Build a surface from ``{"polygons": [[z, ...], ...], "pairings": [[P, k, Q, l, kind], ...]}``."""
    polys = tuple(np.array([as_complex(z) for z in v], dtype=complex) for v in spec["polygons"])
    for v in polys:
        if 0.5 * float(np.sum((np.conj(v) * np.roll(v, -1)).imag)) <= 0:
            raise InputError("polygons must be listed counter-clockwise")
    pairs = []
    for item in spec["pairings"]:
        if isinstance(item, dict):
            item = [item["poly_a"], item["edge_a"], item["poly_b"], item["edge_b"], item.get("kind", "translation")]
        kind = item[4] if len(item) > 4 else "translation"
        if kind not in ("translation", "flip"):
            raise InputError(f"unknown gluing type {kind!r}")
        pairs.append(Pairing(int(item[0]), int(item[1]), int(item[2]), int(item[3]), kind))

    offsets = np.cumsum([0] + [len(v) for v in polys])
    n_vert = int(offsets[-1])
    uf = _UnionFind(n_vert)
    poly_uf = _UnionFind(len(polys))
    glue = {}
    seen = set()
    for pr in pairs:
        P, k, Q, l = pr.poly_a, pr.edge_a, pr.poly_b, pr.edge_b
        for key in ((P, k), (Q, l)):
            if key in seen:
                raise MismatchedEdges(f"edge {key} is paired twice")
            seen.add(key)
        nP, nQ = len(polys[P]), len(polys[Q])
        vk, vk1 = polys[P][k], polys[P][(k + 1) % nP]
        wl, wl1 = polys[Q][l], polys[Q][(l + 1) % nQ]
        ev, ew = vk1 - vk, wl1 - wl
        scale = max(abs(ev), abs(ew), 1.0)
        sign = 1 if pr.kind == "translation" else -1
        # translation needs ev = -ew, flip needs ev = ew
        if abs(ev + sign * ew) > 1e-12 * scale:
            raise MismatchedEdges(f"edges ({P},{k}) and ({Q},{l}) are not congruent for a {pr.kind}")
        c = wl1 - sign * vk
        glue[(P, k)] = (Q, l, sign, c)
        # inverse map
        glue[(Q, l)] = (P, k, sign, -sign * c)
        uf.union(offsets[P] + k, offsets[Q] + (l + 1) % nQ)
        uf.union(offsets[P] + (k + 1) % nP, offsets[Q] + l)
        poly_uf.union(P, Q)
    total_edges = sum(len(v) for v in polys)
    if len(seen) != total_edges:
        raise MismatchedEdges("every edge must be paired exactly once")
    if len({poly_uf.find(i) for i in range(len(polys))}) != 1:
        raise Disconnected("the polygons do not form a connected surface")

    classes: dict[int, list] = {}
    for P, v in enumerate(polys):
        n = len(v)
        for k in range(n):
            a = v[(k - 1) % n] - v[k]
            b = v[(k + 1) % n] - v[k]
            ang = (math.atan2((np.conj(b) * a).imag, (np.conj(b) * a).real)) % (2 * math.pi)
            classes.setdefault(uf.find(offsets[P] + k), []).append((P, k, ang))
    vclasses = []
    cones = []
    for members in classes.values():
        ang = sum(m[2] for m in members)
        vclasses.append((ang, tuple((m[0], m[1]) for m in members)))
        if abs(ang - 2 * math.pi) > 1e-9:
            cones.append(ang)
    chi = len(classes) - len(pairs) + len(polys)
    if chi % 2:
        raise InputError("Euler characteristic is odd; gluing is not an orientable closed surface")
    genus = (2 - chi) // 2
    # Gauss-Bonnet: sum over vertices of (2 pi - angle) = 2 pi chi
    gb = sum(2 * math.pi - a for a, _ in vclasses)
    if abs(gb - 2 * math.pi * chi) > 1e-8:
        raise MismatchedEdges("angle defects violate Gauss-Bonnet")
    return HalfTranslationSurface(polys, tuple(pairs), tuple(sorted(cones)), tuple(vclasses), genus, glue)


def square_torus() -> HalfTranslationSurface:
    return make_surface({"polygons": [[0, 1, 1 + 1j, 1j]], "pairings": [[0, 0, 0, 2], [0, 1, 0, 3]]})


def regular_octagon(circumradius: float = 1.0) -> HalfTranslationSurface:
    """Opposite sides glued by translations; one cone point of angle 6 pi."""
    # vertex angles chosen so that edges 0 and 4 are horizontal
    v = [circumradius * np.exp(1j * (-5 * math.pi / 8 + k * math.pi / 4)) for k in range(8)]
    return make_surface({"polygons": [v], "pairings": [[0, k, 0, k + 4] for k in range(4)]})


# ---------------------------------------------------------------------------
# straight-line flow


@dataclass(frozen=True)
class FlatSegment:
    poly: int
    z0: complex
    z1: complex

    @property
    def length(self) -> float:
        return abs(self.z1 - self.z0)

    def to_dict(self) -> dict:
        return {"poly": self.poly, "z0": complex_pair(self.z0), "z1": complex_pair(self.z1)}


@dataclass(frozen=True, eq=False)
class FlatTrajectory:
    start: tuple  # (poly, z)
    theta: float
    direction: complex
    time: float
    segments: tuple
    end: tuple
    end_direction: complex

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)


def flow_direction(theta: float) -> complex:
    """Unit direction of the horizontal foliation of e^{i theta} dz^2."""
    return complex(np.exp(-0.5j * theta))


def flow_from(surface: HalfTranslationSurface, start: tuple, direction: complex, T: float,
              theta: float = float("nan"), vertex_tol: float = 1e-11) -> FlatTrajectory:
    poly, z = int(start[0]), complex(start[1])
    d = complex(direction) / abs(direction)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if not surface.contains(poly, z, 1e-9):
        raise InputError("start point is not inside its polygon")
    for v in surface.polygons[poly]:
        if abs(z - v) < vertex_tol:
            raise HitsConePoint("start point is a polygon vertex")
    segs = []
    remaining = float(T)
    last_edge = None
    guard = 0
    while True:
        guard += 1
        if guard > 10_000_000:
            raise RuntimeError("flow did not terminate")
        v = surface.polygons[poly]
        n = len(v)
        best_s, best_k, best_u = math.inf, -1, 0.0
        for k in range(n):
            if last_edge == k:
                continue
            a, b = v[k], v[(k + 1) % n]
            e = b - a
            den = (np.conj(d) * e).imag
            if abs(den) < 1e-300:
                continue
            # z + s d = a + u e
            s = (np.conj(e) * (a - z)).imag / (np.conj(e) * d).imag
            u = (np.conj(d) * (z - a)).imag / den
            if s > 1e-14 and -1e-12 <= u <= 1 + 1e-12 and s < best_s:
                best_s, best_k, best_u = s, k, u
        if best_k < 0:
            raise RuntimeError("trajectory left the polygon; surface or start point inconsistent")
        if remaining <= best_s:
            z_end = z + remaining * d
            segs.append(FlatSegment(poly, z, z_end))
            return FlatTrajectory((int(start[0]), complex(start[1])), theta, complex(direction) / abs(direction),
                                  float(T), tuple(segs), (poly, z_end), d)
        a, b = v[best_k], v[(best_k + 1) % n]
        elen = abs(b - a)
        if min(best_u, 1 - best_u) * elen < vertex_tol:
            raise HitsConePoint(f"trajectory runs into a vertex of polygon {poly}")
        z_hit = z + best_s * d
        segs.append(FlatSegment(poly, z, z_hit))
        remaining -= best_s
        Q, l, sign, c = surface.glue[(poly, best_k)]
        z = sign * z_hit + c
        d = sign * d
        poly = Q
        last_edge = l


def flow(surface: HalfTranslationSurface, start: tuple, theta: float, T: float) -> FlatTrajectory:
    """Horizontal flow of e^{i theta} phi for time T (phi-length T)."""
    return flow_from(surface, start, flow_direction(theta), T, theta=theta)


def reverse_flow(surface: HalfTranslationSurface, traj: FlatTrajectory) -> FlatTrajectory:
    return flow_from(surface, traj.end, -traj.end_direction, traj.time, theta=traj.theta)


def _segment_nodes(seg: FlatSegment, max_len: float = 0.25):
    n = max(1, int(math.ceil(seg.length / max_len)))
    edges = np.linspace(0.0, 1.0, n + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    u = (0.5 * (hi - lo) * _GL_X[None, :] + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * _GL_W[None, :]).ravel() * seg.length
    return seg.z0 + u * (seg.z1 - seg.z0), w


def birkhoff_average(surface: HalfTranslationSurface, f: Callable, start: tuple, theta: float,
                     T: float, traj: FlatTrajectory | None = None) -> float:
    """(1/T) * integral over the trajectory of f(poly, z) dt."""
    traj = flow(surface, start, theta, T) if traj is None else traj
    if T == 0:
        return float(np.real(f(traj.start[0], np.array([traj.start[1]]))[0]))
    total = 0.0
    for seg in traj.segments:
        if seg.length == 0:
            continue
        z, w = _segment_nodes(seg)
        total += float(np.sum(w * np.real(f(seg.poly, z))))
    return total / T


# ---------------------------------------------------------------------------
# quadratic differentials relative to phi


def ratio_function(psi_ratio) -> Callable:
    """Normalize a psi/phi specification to a callable (poly, z) -> complex array.

    Accepts a constant, a per-polygon sequence of constants, or a callable.
    """
    if callable(psi_ratio):
        return psi_ratio
    if np.ndim(psi_ratio) == 0:
        r = as_complex(psi_ratio)
        return lambda poly, z: np.full(np.shape(z), r, dtype=complex)
    vals = [as_complex(v) for v in psi_ratio]
    return lambda poly, z: np.full(np.shape(z), vals[poly], dtype=complex)


def f_theta(psi_ratio, theta: float) -> Callable:
    """|Re sqrt(psi / (e^{i theta} phi))| along the flow direction."""
    rf = ratio_function(psi_ratio)
    rot = np.exp(-0.5j * theta)
    return lambda poly, z: np.abs((np.sqrt(rf(poly, z)) * rot).real)


def flat_width(segments: Sequence[FlatSegment], psi_ratio=1.0, n_scan: int = 64) -> float:
    """Width of a segment chain for psi = ratio * phi."""
    rf = ratio_function(psi_ratio)
    total = 0.0
    for seg in segments:
        dz = seg.z1 - seg.z0
        if dz == 0:
            continue
        dens = lambda u, seg=seg, dz=dz: np.sqrt(rf(seg.poly, seg.z0 + np.asarray(u) * dz)) * dz
        total += segment_width(dens, n_scan=n_scan)
    return total


def flat_width_fixed(segments: Sequence[FlatSegment], psi_ratio=1.0, n_nodes: int = 80) -> float:
    """Fixed-node Gauss rule for the width; an independent cross-check."""
    rf = ratio_function(psi_ratio)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * (x + 1)
    total = 0.0
    for seg in segments:
        dz = seg.z1 - seg.z0
        if dz == 0:
            continue
        vals = np.sqrt(rf(seg.poly, seg.z0 + u * dz)) * dz
        total += float(np.sum(0.5 * w * np.abs(vals.real)))
    return total


def ratio_norm(surface: HalfTranslationSurface, psi_ratio, n: int = 24) -> float:
    """Integral of |psi| = |psi/phi| |phi| over the surface (fan triangulation)."""
    rf = ratio_function(psi_ratio)
    x, w = np.polynomial.legendre.leggauss(n)
    a = 0.5 * (x + 1)
    wa = 0.5 * w
    A, B = np.meshgrid(a, a, indexing="ij")
    W = np.outer(wa, wa) * (1 - A)  # collapsed square -> triangle
    total = 0.0
    for P, v in enumerate(surface.polygons):
        for k in range(1, len(v) - 1):
            p0, p1, p2 = v[0], v[k], v[k + 1]
            z = p0 + A * (p1 - p0) + (1 - A) * B * (p2 - p0)
            jac = abs(((p1 - p0).conjugate() * (p2 - p0)).imag)
            total += float(np.sum(W * np.abs(rf(P, z)))) * jac
    return total


# ---------------------------------------------------------------------------
# closing trajectories


@dataclass(frozen=True, eq=False)
class FlatCurve:
    segments: tuple
    closing_insert: FlatSegment | None
    width_bound: float = 0.0  # certified |w(closed) - w(open)| bound for the ratio used

    @property
    def all_segments(self) -> tuple:
        return self.segments + ((self.closing_insert,) if self.closing_insert is not None else ())

    @property
    def length(self) -> float:
        return sum(s.length for s in self.all_segments)

    def is_closed(self, tol: float = 1e-9) -> bool:
        segs = self.all_segments
        return segs[-1].poly == segs[0].poly and abs(segs[-1].z1 - segs[0].z0) <= tol

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments],
                "closing_insert": None if self.closing_insert is None else self.closing_insert.to_dict(),
                "width_bound": self.width_bound}


def close_up(traj: FlatTrajectory, eps: float, angle_bound: float = 0.2, psi_ratio=1.0,
             exact_tol: float = 1e-12) -> FlatCurve:
    """Close the trajectory with the segment from its end back to its start."""
    poly0, z0 = traj.start
    poly1, z1 = traj.end
    if poly0 != poly1 or abs(z1 - z0) > eps:
        raise NotCloseEnough(f"endpoint is {abs(z1 - z0):.3e} away (eps={eps:g}) or in another chart")
    gap = z0 - z1
    if abs(gap) <= exact_tol:
        return FlatCurve(traj.segments, None, 0.0)
    ang = abs(math.atan2(gap.imag, gap.real))
    ang = min(ang, math.pi - ang)
    if ang > angle_bound:
        raise InsertTooSteep(f"insert makes angle {ang:.3f} with the horizontal (bound {angle_bound})")
    ins = FlatSegment(poly0, z1, z0)
    rf = ratio_function(psi_ratio)
    zs = z1 + np.linspace(0, 1, 33) * gap
    bound = abs(gap) * float(np.abs(np.sqrt(rf(poly0, zs))).max())
    return FlatCurve(traj.segments, ins, bound)


def _transverse_margin(segments: Sequence[FlatSegment]) -> float:
    """min |Re dz| / |dz| over the chain (phi = dz^2)."""
    out = math.inf
    for s in segments:
        dz = s.z1 - s.z0
        if dz != 0:
            out = min(out, abs(dz.real) / abs(dz))
    return out


@dataclass(frozen=True, eq=False)
class WkbCurveResult:
    curve: FlatCurve
    theta: float
    start: tuple
    w_phi: float
    w_psi: float
    margin: float
    transversality: float


def _candidate_closures(surface, start, d0, T, eps, exact_tol=1e-10):
    """Yield (segments, insert) for passes of the trajectory through the
    start polygon that can be closed by a forward horizontal insert of
    length at most eps ending at the start point."""
    poly0, z0 = start
    traj = flow_from(surface, start, d0, T)
    segs = traj.segments
    travelled = 0.0
    for j, seg in enumerate(segs):
        dz = seg.z1 - seg.z0
        if j > 0 and seg.poly == poly0 and dz != 0:
            if abs(dz.imag) < 1e-14 * abs(dz):
                # horizontal strand: closes exactly if it passes through z0
                if abs(seg.z0.imag - z0.imag) <= exact_tol:
                    s = (z0.real - seg.z0.real) / dz.real
                    if 0 <= s <= 1:
                        cut = FlatSegment(seg.poly, seg.z0, z0)
                        yield segs[:j] + (cut,), None, travelled + cut.length
            else:
                s = (z0.imag - seg.z0.imag) / dz.imag
                if 0 < s <= 1:
                    q = seg.z0 + s * dz
                    gap = z0 - q
                    forward = gap.real * dz.real >= 0
                    if abs(gap) <= exact_tol:
                        cut = FlatSegment(seg.poly, seg.z0, z0)
                        yield segs[:j] + (cut,), None, travelled + cut.length
                    elif abs(gap) <= eps and forward:
                        cut = FlatSegment(seg.poly, seg.z0, q)
                        yield segs[:j] + (cut,), FlatSegment(poly0, q, z0), travelled + cut.length
        travelled += seg.length


def _start_points(surface: HalfTranslationSurface, n: int, seed: int) -> list[tuple]:
    rng = np.random.default_rng(seed)
    out = []
    v = surface.polygons[0]
    lo = np.array([v.real.min(), v.imag.min()])
    hi = np.array([v.real.max(), v.imag.max()])
    while len(out) < n:
        P = int(rng.integers(len(surface.polygons)))
        v = surface.polygons[P]
        lo = np.array([v.real.min(), v.imag.min()])
        hi = np.array([v.real.max(), v.imag.max()])
        xy = lo + (hi - lo) * rng.random(2)
        z = complex(xy[0], xy[1])
        if surface.contains(P, z, -1e-3):
            out.append((P, z))
    return out


def find_wkb_curve(surface: HalfTranslationSurface, psi_ratio, theta0: float = 0.3, n_theta: int = 7,
                   theta_min: float = 0.0,
                   n_starts: int = 8, T_max: float = 200.0, eps: float = 1e-2, seed: int = 0,
                   angle_bound: float = 0.2, norm_check: bool = True) -> WkbCurveResult:
    """Closed curve, transverse to the vertical foliation of phi, with
    w_phi - w_psi > 0 certified by direct width computation.

    Search cells (theta index, start index) are visited in order; within a
    cell every admissible closure of the trajectory is tried, and the first
    certified one wins.
    """
    rf = ratio_function(psi_ratio)
    probe = [(P, complex(np.mean(v))) for P, v in enumerate(surface.polygons)]
    if all(np.allclose(rf(P, np.array([z])), 1.0, atol=1e-14) for P, z in probe) and not callable(psi_ratio):
        raise InputError("psi equals phi; no strict inequality is possible")
    if norm_check:
        n_phi = surface.area()
        n_psi = ratio_norm(surface, psi_ratio)
        if n_psi > n_phi * (1 + 1e-9):
            raise InputError(f"requires ||phi|| >= ||psi||, got {n_phi:.6g} < {n_psi:.6g}")
    thetas = np.linspace(theta_min, theta0, n_theta)
    starts = _start_points(surface, n_starts, seed)
    best = -math.inf
    for th in thetas:
        d0 = flow_direction(float(th))
        for st in starts:
            try:
                cands = _candidate_closures(surface, st, d0, T_max, eps)
                for segs, ins, _ in cands:
                    all_segs = segs + ((ins,) if ins is not None else ())
                    trans = _transverse_margin(all_segs)
                    if not trans > 1e-9:
                        continue
                    w_phi = flat_width(all_segs, 1.0)
                    w_psi = flat_width(all_segs, rf)
                    margin = w_phi - w_psi
                    best = max(best, margin)
                    if margin > 0:
                        bound = 0.0
                        if ins is not None:
                            zs = ins.z0 + np.linspace(0, 1, 33) * (ins.z1 - ins.z0)
                            bound = ins.length * float(np.abs(np.sqrt(rf(ins.poly, zs))).max())
                        curve = FlatCurve(segs, ins, bound)
                        return WkbCurveResult(curve, float(th), st, w_phi, w_psi, margin, trans)
            except HitsConePoint:
                continue
    raise SearchExhausted("no certified WKB curve within the search budget", best_margin=best)
