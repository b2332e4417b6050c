"""Injectivity screening, inscribed polygons, Delta-move legality and isotopy certificates."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _parallel
from .curve_model import ArcCurve, Polyline, resample_arclength
from .errors import NumericalError, ResolutionError, ValidationError
from .hausdorff import hausdorff_distance
from .predicates import (in_closed_cone2d, lift, orient3d, projector, segment_triangle2d, segment_triangle3d,
                         segments_intersect2d, segments_intersect3d, triangle_normal)
from .tp_energy import DEFAULT_EXCLUSION, refine_energy

logger = logging.getLogger("tpcurve.knot_ops")

DEFAULT_DELTA = 0.1


@dataclass
class ScreenResult:
    passed: bool
    witness: Optional[Tuple[int, int]]
    min_distance: float
    min_separation: float

    def to_dict(self):
        return {"passed": self.passed, "witness": list(self.witness) if self.witness else None,
                "min_distance": self.min_distance, "min_separation": self.min_separation}


def injectivity_screen(c: ArcCurve, min_separation: Optional[float] = None) -> ScreenResult:
    """Look for node pairs far apart along the curve but closer than h/2 in space.

    ``min_distance`` is the smallest spatial distance among pairs whose
    intrinsic distance is at least ``min_separation`` (default 2h); the
    witness is the pair attaining it when the screen fails.
    """
    h = c.h
    if min_separation is None:
        min_separation = 2 * h
    if min_separation < 2 * h * (1 - 1e-12):
        raise ValidationError(f"min_separation must be at least 2h = {2 * h:.6g}")
    X = c.nodes
    m = c.m

    def work(block):
        rows = np.arange(block.start, block.stop)
        d = np.linalg.norm(X[rows, None, :] - X[None, :, :], axis=2)
        far = c.intrinsic_distance(rows[:, None], np.arange(m)[None, :]) >= min_separation * (1 - 1e-12)
        d = np.where(far, d, np.inf)
        k = int(np.argmin(d))
        i, j = divmod(k, m)
        return float(d[i, j]), (int(rows[i]), j)

    best, pair = np.inf, None
    for val, pr in _parallel.ordered_map(work, _parallel.row_blocks(m, m * 3)):
        if val < best:
            best, pair = val, pr
    passed = not best < h / 2
    if pair is not None:
        pair = tuple(sorted(pair))
    return ScreenResult(passed, None if passed else pair, float(best), float(min_separation))


@dataclass
class InscribedPolygon:
    vertex_params: np.ndarray
    vertices: np.ndarray
    spacing_bound: float
    closed: bool
    indices: np.ndarray

    @property
    def N(self) -> int:
        return len(self.vertices)

    def chords(self) -> np.ndarray:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0) if self.closed else v[1:]
        return np.linalg.norm(nxt - v[: len(nxt)], axis=1)

    def to_polyline(self) -> Polyline:
        return Polyline(self.vertices, self.closed)

    def to_dict(self):
        return {"N": self.N, "spacing_bound": self.spacing_bound, "closed": self.closed,
                "vertex_params": self.vertex_params.tolist(), "vertices": self.vertices.tolist()}


def inscribe_polygon(c: ArcCurve, spacing_bound: float) -> InscribedPolygon:
    """Greedy inscribed polygon whose consecutive vertices are closer than ``spacing_bound``.

    Walking along the nodes, a vertex is emitted at the last node whose chord
    to the previous vertex is still below the bound. For closed curves the
    walk continues up to the starting node, and the final vertex is dropped
    when the closing chord stays below the bound without it. Closed results
    have at least three vertices; open results always start and end at the
    curve's endpoints.
    """
    X = c.nodes
    m = c.m
    if not spacing_bound > 2 * c.h:
        raise ResolutionError(f"spacing_bound {spacing_bound} must exceed 2h = {2 * c.h:.6g}")

    def chord(i, j):
        return float(np.linalg.norm(X[i % m] - X[j % m]))

    verts = [0]
    end = m if c.closed else m - 1
    j = 1
    while j <= end:
        if chord(verts[-1], j) >= spacing_bound:
            verts.append(j - 1)
        j += 1
    if c.closed:
        if len(verts) >= 2 and chord(verts[-2], 0) < spacing_bound:
            verts.pop()
        if len(verts) < 3:
            verts = _three_vertices(X, verts, spacing_bound)
    else:
        if verts[-1] != m - 1:
            verts.append(m - 1)
    idx = np.asarray(verts, dtype=int)
    poly = InscribedPolygon(idx * c.h, X[idx].copy(), float(spacing_bound), c.closed, idx)
    if np.any(poly.chords() >= spacing_bound):
        raise NumericalError("inscription failed to satisfy the spacing bound")
    return poly


def _three_vertices(X, verts, bound):
    # the greedy walk left fewer than three vertices: add nodes keeping every chord short
    m = len(X)
    verts = list(verts)
    while len(verts) < 3:
        ring = verts + [verts[0] + m]
        gaps = [ring[k + 1] - ring[k] for k in range(len(verts))]
        k = int(np.argmax(gaps))
        a, b = ring[k], ring[k + 1]
        cand = np.arange(a + 1, b)
        ok = [(np.linalg.norm(X[i % m] - X[a % m]) < bound) and (np.linalg.norm(X[i % m] - X[b % m]) < bound)
              for i in cand]
        good = cand[np.asarray(ok, dtype=bool)]
        if len(good) == 0:
            raise NumericalError("cannot place a third vertex under the spacing bound")
        mid = (a + b) / 2
        pick = int(good[np.argmin(np.abs(good - mid))])
        verts.insert(k + 1, pick % m)
        verts = sorted(verts)
    return verts


def polygon_is_simple(p: Polyline) -> bool:
    """Exact test that no two edges meet except consecutive edges at their shared vertex."""
    pts = p.points
    n = len(pts)
    edges = [(i, (i + 1) % n) for i in range(n if p.closed else n - 1)]
    E = np.array([[pts[a], pts[b]] for a, b in edges])
    lo = E.min(axis=1)
    hi = E.max(axis=1)
    P = lift(pts) if p.dim == 3 else [tuple(x) for x in lift(pts)]
    ne = len(edges)
    for i in range(ne):
        for j in range(i + 1, ne):
            if np.any(lo[i] > hi[j]) or np.any(lo[j] > hi[i]):
                continue
            (a, b), (c, d) = edges[i], edges[j]
            shared = {a, b} & {c, d}
            if shared:
                if len(shared) == 2:
                    continue  # the two edges of a 2-gon; impossible for valid polylines
                s = shared.pop()
                o1 = b if a == s else a
                o2 = d if c == s else c
                if _collinear_overlap(P[s], P[o1], P[o2]):
                    return False
                continue
            if _segments_meet(P[a], P[b], P[c], P[d], p.dim):
                return False
    return True


def _collinear_overlap(s, a, b) -> bool:
    # edges [s, a] and [s, b] fold back onto each other
    u = tuple(x - y for x, y in zip(a, s))
    v = tuple(x - y for x, y in zip(b, s))
    cross = (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])
    return all(x == 0 for x in cross) and sum(x * y for x, y in zip(u, v)) > 0


def _segments_meet(a, b, c, d, dim) -> bool:
    if dim == 2:
        return segments_intersect2d(a[:2], b[:2], c[:2], d[:2])
    return segments_intersect3d(a, b, c, d)


def delta_move_valid(p: Polyline, edge_index: int, apex, check_simple: bool = True) -> bool:
    """Whether the triangle over edge ``edge_index`` with the given apex meets ``p`` only in that edge.

    Edges sharing a vertex with the moved edge may touch the triangle only at
    that vertex; every other edge must miss the closed triangle entirely.
    All tests use exact arithmetic on the input doubles.
    """
    if not p.closed:
        raise ValidationError("p: a Delta-move needs a closed polygon")
    n = len(p.points)
    if not 0 <= edge_index < n:
        raise ValidationError(f"edge_index must lie in [0, {n})")
    apex = np.asarray(apex, dtype=float)
    if apex.shape != (p.dim,):
        raise ValidationError(f"apex must have dimension {p.dim}")
    if check_simple and not polygon_is_simple(p):
        raise ValidationError("p: polygon is not simple")
    P = lift(p.points)
    ia, ib = edge_index, (edge_index + 1) % n
    A, B = P[ia], P[ib]
    W = lift([apex])[0]
    normal = triangle_normal(A, B, W)
    if all(x == 0 for x in normal):
        raise ValidationError("apex: collinear with the edge, the triangle is degenerate")
    proj = projector(normal)
    planar = p.dim == 2
    for k in range(n):
        if k == edge_index:
            continue
        c, d = k, (k + 1) % n
        if d == ia or c == ib:
            # shares one vertex of the moved edge: test the other endpoint's direction
            s, o = (ia, c) if d == ia else (ib, d)
            other = ia if s == ib else ib
            S, O = P[s], P[o]
            if not planar and orient3d(A, B, W, O) != 0:
                continue
            dvec = tuple(x - y for x, y in zip(proj(O), proj(S)))
            u1 = tuple(x - y for x, y in zip(proj(P[other]), proj(S)))
            u2 = tuple(x - y for x, y in zip(proj(W), proj(S)))
            if in_closed_cone2d(dvec, u1, u2):
                return False
            continue
        C, D = P[c], P[d]
        if planar:
            hit = segment_triangle2d(C[:2], D[:2], A[:2], B[:2], W[:2])
        else:
            hit = segment_triangle3d(C, D, A, B, W)
        if hit:
            return False
    return True


def isotopy_threshold(E1: float, E2: float, q: float, delta_q: float = DEFAULT_DELTA) -> float:
    """Hausdorff distance below which two curves of energies E1, E2 are certified isotopic."""
    if not q > 2:
        raise ValidationError("q: threshold undefined at and below the critical exponent 2")
    if not (E1 > 0 and E2 > 0):
        raise ValidationError("energies must be positive")
    if not delta_q > 0:
        raise ValidationError("delta_q must be positive")
    return float(delta_q * max(E1, E2) ** (-1.0 / (q - 2.0)))


@dataclass
class IsotopyCertificate:
    q: float
    E1: float
    E2: float
    threshold: float
    hausdorff: float
    verdict: str
    delta_q: float
    m: int

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def certify_isotopy(a: ArcCurve, b: ArcCurve, q: float, delta_q: float = DEFAULT_DELTA,
                    m: Optional[int] = None, exclusion_width: int = DEFAULT_EXCLUSION) -> IsotopyCertificate:
    """One-sided isotopy certificate from energies and Hausdorff distance.

    Both curves are resampled to the same node count. Each energy must look
    finite under refinement (m/4, m/2, m); the verdict is ``"certified"`` when
    the distance is below the threshold and ``"inconclusive"`` otherwise.
    """
    if not q > 2:
        raise ValidationError("q: threshold undefined at and below the critical exponent 2")
    if m is None:
        m = max(a.m, b.m)
    m = int(m)
    if m < 64:
        raise ResolutionError("m: certification needs at least 64 nodes")
    energies = []
    for name, c in (("a", a), ("b", b)):
        if not c.closed:
            raise ValidationError(f"{name}: certification needs a closed curve")
        cm = resample_arclength(c, m) if c.m != m else c
        screen = injectivity_screen(cm)
        if not screen.passed:
            raise ValidationError(f"{name}: fails the injectivity screen at nodes {screen.witness}")
        ref = refine_energy(c.to_polyline(), q, [m // 4, m // 2, m], exclusion_width)
        if ref.verdict != "converged":
            raise NumericalError(f"{name}: energy not finite at this resolution")
        energies.append(ref.values[-1])
    E1, E2 = energies
    thr = isotopy_threshold(E1, E2, q, delta_q)
    dist = hausdorff_distance(a.to_polyline(), b.to_polyline())
    verdict = "certified" if dist < thr else "inconclusive"
    logger.info("isotopy %s: distance %.6g, threshold %.6g", verdict, dist, thr)
    return IsotopyCertificate(float(q), float(E1), float(E2), thr, float(dist), verdict, float(delta_q), m)
