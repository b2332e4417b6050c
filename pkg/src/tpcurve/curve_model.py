"""
Curve representation
====================

Polylines, arclength-uniform node curves, the model shape generators and
tangent estimation. Coordinates are plain ``(n, dim)`` float arrays with
``dim`` in {2, 3}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .errors import ResolutionError, TangentError, ValidationError

SHAPE_KINDS = (
    "circle",
    "k_circle",
    "regular_polygon",
    "torus_knot",
    "stadium",
    "power_graph",
    "perturbed_circle",
    "ellipse",
    "figure_eight",
    "segment",
)

MIN_NODES = 8


def _as_points(points) -> np.ndarray:
    pts = np.array(points, dtype=float)
    if pts.ndim != 2:
        raise ValidationError("points must be a list of coordinate rows")
    if pts.shape[1] not in (2, 3):
        raise ValidationError(f"points: dim must be 2 or 3, got {pts.shape[1]}")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("points: non-finite coordinate")
    return pts


def edge_vectors(points: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        return np.roll(points, -1, axis=0) - points
    return points[1:] - points[:-1]


def polygon_length(points: np.ndarray, closed: bool) -> float:
    return float(np.sum(np.linalg.norm(edge_vectors(points, closed), axis=1)))


@dataclass(frozen=True)
class Polyline:
    """Ordered vertex list; closed polylines do not repeat the first vertex."""

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        pts = _as_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        need = 3 if self.closed else 2
        if len(pts) < need:
            kind = "closed" if self.closed else "open"
            raise ValidationError(f"points: a {kind} polyline needs at least {need} points")
        gaps = np.linalg.norm(edge_vectors(pts, self.closed), axis=1)
        if np.any(gaps <= 0.0):
            k = int(np.argmin(gaps))
            raise ValidationError(f"points: consecutive points {k} and {(k + 1) % len(pts)} coincide")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def length(self) -> float:
        return polygon_length(self.points, self.closed)

    def scaled(self, s: float) -> "Polyline":
        return Polyline(self.points * s, self.closed)


@dataclass(frozen=True)
class ArcCurve:
    """Nodes at uniform arclength spacing with their unit tangents.

    ``length`` is the arclength of the curve the nodes were sampled from,
    so the parameter of node ``i`` is ``i * h``.
    """

    nodes: np.ndarray
    tangents: np.ndarray
    length: float
    closed: bool = True

    def __post_init__(self):
        for name in ("nodes", "tangents"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.length <= 0:
            raise ValidationError("length must be positive")
        if self.nodes.ndim != 2 or self.tangents.shape != self.nodes.shape:
            raise ValidationError("nodes and tangents must be arrays of the same shape")
        if np.any(np.abs(np.linalg.norm(self.tangents, axis=1) - 1.0) > 1e-9):
            raise ValidationError("tangents must be unit vectors")

    @classmethod
    def from_nodes(cls, nodes, closed: bool = True) -> "ArcCurve":
        """Treat ``nodes`` as the curve itself (a polygon with those vertices)."""
        nodes = _as_points(nodes)
        return cls(nodes, estimate_tangents(nodes, closed), polygon_length(nodes, closed), closed)

    @property
    def m(self) -> int:
        return len(self.nodes)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def h(self) -> float:
        return self.length / (self.m if self.closed else self.m - 1)

    @property
    def params(self) -> np.ndarray:
        return np.arange(self.m) * self.h

    def to_polyline(self) -> Polyline:
        return Polyline(self.nodes, self.closed)

    def scaled(self, s: float) -> "ArcCurve":
        return ArcCurve(self.nodes * s, self.tangents, self.length * s, self.closed)

    def node_index(self, u: float) -> int:
        """Nearest node to arclength parameter ``u`` (wrapped for closed curves)."""
        i = int(round(u / self.h))
        if self.closed:
            return i % self.m
        if not 0 <= i < self.m:
            raise ValidationError(f"parameter {u} outside [0, {self.length}]")
        return i

    def intrinsic_distance(self, i, j):
        d = np.abs(np.asarray(i) - np.asarray(j))
        if self.closed:
            d = np.minimum(d, self.m - d)
        return d * self.h


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    parameters: Dict[str, Any] = field(default_factory=dict)

    def get(self, name, default=None):
        return self.parameters.get(name, default)


def _require(cond, kind, name, msg):
    if not cond:
        raise ValidationError(f"{kind}: parameter '{name}' {msg}")


def _positive(spec, name, default):
    val = float(spec.get(name, default))
    _require(val > 0 and math.isfinite(val), spec.kind, name, f"must be positive, got {val}")
    return val


def _count(spec, name, default, minimum):
    val = spec.get(name, default)
    _require(float(val) == int(val), spec.kind, name, f"must be an integer, got {val}")
    val = int(val)
    _require(val >= minimum, spec.kind, name, f"must be at least {minimum}, got {val}")
    return val


def _embed(xy, dim):
    if dim == 2:
        return xy
    return np.column_stack([xy, np.zeros(len(xy))])


def _arclength_uniform(fn, n, closed, oversample=64, sweeps=60):
    """Sample ``fn(t)``, t in [0, 1], so that all chords have equal length.

    Starts from uniform arclength on a dense polygon, then moves the
    parameters until the chord lengths agree to rounding. Equal chords make
    the samples reproduce themselves under polygonal arclength resampling.
    """
    dense_t = np.linspace(0.0, 1.0, n * oversample + 1)
    dense = fn(dense_t)
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    count = n if closed else n - 1
    t = np.interp(np.arange(count + 1) * (s[-1] / count), s, dense_t)
    t[0], t[-1] = 0.0, 1.0
    for _ in range(sweeps):
        chords = np.linalg.norm(np.diff(fn(t), axis=0), axis=1)
        if np.ptp(chords) <= 1e-14 * chords.mean():
            break
        cum = np.concatenate([[0.0], np.cumsum(chords)])
        t = np.interp(np.arange(count + 1) * (cum[-1] / count), cum, t)
        t[0], t[-1] = 0.0, 1.0
    return fn(t[:n])


def generate(spec: ShapeSpec) -> Polyline:
    """Sample a model curve.

    ``power_graph`` and ``segment`` are open, everything else is closed.
    Planar shapes get ``dim`` (default 3) coordinates with z = 0.
    """
    kind = spec.kind
    if kind not in SHAPE_KINDS:
        raise ValidationError(f"kind: unknown shape '{kind}'")
    dim = int(spec.get("dim", 3))
    _require(dim in (2, 3), kind, "dim", f"must be 2 or 3, got {dim}")

    if kind == "circle":
        r = _positive(spec, "radius", 1.0)
        n = _count(spec, "samples", 256, 3)
        th = 2 * np.pi * np.arange(n) / n
        return Polyline(_embed(r * np.column_stack([np.cos(th), np.sin(th)]), dim), True)

    if kind == "k_circle":
        r = _positive(spec, "radius", 1.0)
        k = _count(spec, "k", 2, 1)
        n = _count(spec, "samples", 256 * k, 3)
        _require(n % k != 0 or n // k >= 3, kind, "samples", "too few per cover")
        th = 2 * np.pi * k * np.arange(n) / n
        return Polyline(_embed(r * np.column_stack([np.cos(th), np.sin(th)]), dim), True)

    if kind == "regular_polygon":
        r = _positive(spec, "radius", 1.0)
        nv = _count(spec, "vertices", 4, 3)
        th = 2 * np.pi * np.arange(nv) / nv + float(spec.get("rotation", np.pi / nv))
        return Polyline(_embed(r * np.column_stack([np.cos(th), np.sin(th)]), dim), True)

    if kind == "torus_knot":
        p = _count(spec, "p", 2, 1)
        q = _count(spec, "q", 3, 1)
        _require(math.gcd(p, q) == 1, kind, "q", f"must be coprime to p={p}")
        big = _positive(spec, "R", 3.0)
        small = _positive(spec, "r", 1.0)
        _require(small < big, kind, "r", "must be smaller than R")
        n = _count(spec, "samples", 512, 8)
        _require(dim == 3, kind, "dim", "must be 3")

        def fn(t):
            phi = 2 * np.pi * t
            rad = big + small * np.cos(q * phi)
            return np.column_stack([rad * np.cos(p * phi), rad * np.sin(p * phi), small * np.sin(q * phi)])

        return Polyline(_arclength_uniform(fn, n, True), True)

    if kind == "stadium":
        r = _positive(spec, "radius", 1.0)
        straight = _positive(spec, "straight", 2.0)
        n = _count(spec, "samples", 256, 8)
        total = 2 * straight + 2 * np.pi * r

        def fn(t):
            si = np.asarray(t) * total
            a1 = (si - straight) / r
            a2 = (si - 2 * straight - np.pi * r) / r
            x = np.select([si < straight, si < straight + np.pi * r, si < 2 * straight + np.pi * r],
                          [-straight / 2 + si, straight / 2 + r * np.sin(a1),
                           straight / 2 - (si - straight - np.pi * r)],
                          -straight / 2 - r * np.sin(a2))
            y = np.select([si < straight, si < straight + np.pi * r, si < 2 * straight + np.pi * r],
                          [np.full_like(si, -r), -r * np.cos(a1), np.full_like(si, r)],
                          r * np.cos(a2))
            return np.column_stack([x, y])

        return Polyline(_embed(_arclength_uniform(fn, n, True), dim), True)

    if kind == "power_graph":
        a = float(spec.get("a", 1.5))
        _require(1 < a <= 2, kind, "a", f"must lie in (1, 2], got {a}")
        n = _count(spec, "samples", 512, 2)
        x_min = float(spec.get("x_min", 0.0))
        _require(-1 <= x_min < 1, kind, "x_min", f"must lie in [-1, 1), got {x_min}")

        def fn(t):
            x = x_min + (1.0 - x_min) * np.asarray(t)
            return np.column_stack([x, np.abs(x) ** a])

        return Polyline(_embed(_arclength_uniform(fn, n, False), dim), False)

    if kind == "perturbed_circle":
        r = _positive(spec, "radius", 1.0)
        amp = float(spec.get("amplitude", 0.05))
        _require(0 <= amp < 1, kind, "amplitude", f"must lie in [0, 1), got {amp}")
        mode = _count(spec, "mode", 3, 0)
        phase = float(spec.get("phase", 0.0))
        n = _count(spec, "samples", 256, 8)

        def fn(t):
            th = 2 * np.pi * t
            rr = r * (1 + amp * np.cos(mode * th + phase))
            return np.column_stack([rr * np.cos(th), rr * np.sin(th)])

        return Polyline(_embed(_arclength_uniform(fn, n, True), dim), True)

    if kind == "ellipse":
        a = _positive(spec, "a", 2.0)
        b = _positive(spec, "b", 1.0)
        n = _count(spec, "samples", 512, 8)

        def fn(t):
            th = 2 * np.pi * t
            return np.column_stack([a * np.cos(th), b * np.sin(th)])

        return Polyline(_embed(_arclength_uniform(fn, n, True), dim), True)

    if kind == "figure_eight":
        size = _positive(spec, "size", 1.0)
        lift = float(spec.get("lift", 0.0))
        n = _count(spec, "samples", 512, 8)
        _require(lift == 0 or dim == 3, kind, "lift", "needs dim 3")

        def fn(t):
            th = 2 * np.pi * t
            xy = size * np.column_stack([np.sin(th), np.sin(th) * np.cos(th)])
            if dim == 2:
                return xy
            return np.column_stack([xy, lift * np.cos(th)])

        return Polyline(_arclength_uniform(fn, n, True), True)

    # segment
    length = _positive(spec, "length", 1.0)
    n = _count(spec, "samples", 2, 2)
    direction = np.zeros(dim)
    direction[0] = 1.0
    pts = np.outer(np.linspace(0.0, length, n), direction)
    return Polyline(pts, False)


def estimate_tangents(nodes: np.ndarray, closed: bool) -> np.ndarray:
    """Unit tangents by central differences; one-sided at open endpoints."""
    nxt, prv = neighbor_indices(len(nodes), closed)
    diff = nodes[nxt] - nodes[prv]
    norm = np.linalg.norm(diff, axis=1)
    scale = np.max(np.linalg.norm(nodes - nodes[0], axis=1)) if len(nodes) else 1.0
    bad = norm <= 1e-14 * max(scale, 1e-300)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise TangentError(f"central difference vanishes at node {i}; curve doubles back at grid scale")
    return diff / norm[:, None]


def neighbor_indices(m: int, closed: bool):
    idx = np.arange(m)
    if closed:
        return (idx + 1) % m, (idx - 1) % m
    nxt = np.minimum(idx + 1, m - 1)
    prv = np.maximum(idx - 1, 0)
    return nxt, prv


def tangent_estimate(c: ArcCurve, i: int) -> np.ndarray:
    if not -c.m <= i < c.m:
        raise ValidationError(f"node index {i} out of range for {c.m} nodes")
    nxt, prv = neighbor_indices(c.m, c.closed)
    i = i % c.m
    diff = c.nodes[nxt[i]] - c.nodes[prv[i]]
    norm = np.linalg.norm(diff)
    if norm <= 1e-14 * c.length:
        raise TangentError(f"central difference vanishes at node {i}")
    return diff / norm


def resample_arclength(p, m: int) -> ArcCurve:
    """Place ``m`` nodes at uniform arclength along ``p``.

    ``p`` may be a Polyline or an ArcCurve (whose nodes are then read as a
    polyline). The first node is the first vertex of ``p``.
    """
    if isinstance(p, ArcCurve):
        p = p.to_polyline()
    m = int(m)
    if m < MIN_NODES:
        raise ResolutionError(f"m: need at least {MIN_NODES} nodes, got {m}")
    pts = p.points
    if p.closed:
        pts = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(s[-1])
    if not total > 0:
        raise ValidationError("polyline has zero total length")
    count = m if p.closed else m - 1
    targets = np.arange(m) * (total / count)
    # segment lookup and linear interpolation in one pass keeps vertices exact
    k = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, len(seg) - 1)
    frac = (targets - s[k]) / seg[k]
    nodes = pts[k] + frac[:, None] * (pts[k + 1] - pts[k])
    hit = np.isclose(frac, 0.0, rtol=0, atol=1e-12)
    nodes[hit] = pts[k[hit]]
    return ArcCurve(nodes, estimate_tangents(nodes, p.closed), total, p.closed)


def arc_curve(spec: ShapeSpec, m: Optional[int] = None) -> ArcCurve:
    """Generate ``spec`` with ``samples = m`` and resample to ``m`` nodes."""
    if m is None:
        return resample_arclength(generate(spec), int(spec.get("samples", 256)))
    params = dict(spec.parameters)
    if spec.kind != "regular_polygon":
        params["samples"] = m
    return resample_arclength(generate(ShapeSpec(spec.kind, params)), m)
