"""Three-point functionals: circumradius, integral Menger curvature and thickness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from . import _parallel
from .curve_model import ArcCurve
from .errors import ResolutionError, ValidationError
from .tp_energy import COINCIDENCE_TOL, DEFAULT_EXCLUSION, energy, index_separation, node_weights

MENGER_MAX_NODES = 200
THICKNESS_SCAN_NODES = 256
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def circumradius(x, y, z) -> float:
    """Radius of the circle through three points, ``inf`` for collinear points."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    a = np.linalg.norm(x - y)
    b = np.linalg.norm(y - z)
    c = np.linalg.norm(z - x)
    if min(a, b, c) == 0.0:
        raise ValidationError("circumradius needs three distinct points")
    u, v = y - x, z - x
    if len(u) == 2:
        cross = abs(u[0] * v[1] - u[1] * v[0])
    else:
        cross = float(np.linalg.norm(np.cross(u, v)))
    if cross == 0.0:
        return math.inf
    return float(a * b * c / (2.0 * cross))


def _inv_circumradius(x, Y, Z):
    """1/R for point ``x`` against arrays of points, 0 for collinear triples."""
    u = Y - x
    v = Z - x
    w = Z - Y
    uu = np.einsum("...k,...k->...", u, u)
    vv = np.einsum("...k,...k->...", v, v)
    ww = np.einsum("...k,...k->...", w, w)
    if u.shape[-1] == 2:
        cross = np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    else:
        cr = np.cross(u, v)
        cross = np.sqrt(np.einsum("...k,...k->...", cr, cr))
    den = np.sqrt(uu * vv * ww)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, 2.0 * cross / np.where(den > 0, den, 1.0), 0.0)
    return out


def _inv_tp(nodes, tangents):
    """Matrix of 1/r with the tangent taken at the row node."""
    e = nodes[None, :, :] - nodes[:, None, :]
    a = np.einsum("ijk,ijk->ij", e, e)
    b = np.einsum("ijk,ijk->ij", e, tangents[:, None, :])
    p = np.sqrt(np.maximum(a - b * b, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, 2.0 * p / np.where(a > 0, a, 1.0), 0.0)


def _local_curvature(nodes, closed, w):
    m = len(nodes)
    s = w + 1
    idx = np.arange(m)
    if closed:
        lo, hi = (idx - s) % m, (idx + s) % m
    else:
        mid = np.clip(idx, s, m - 1 - s)
        lo, hi, idx = mid - s, mid + s, mid
    return _inv_circumradius(nodes[idx], nodes[lo], nodes[hi])


@dataclass
class MengerReport:
    value: float
    p: float
    m: int
    exclusion_width: int
    length: float
    flags: List[str]

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def menger_energy(c: ArcCurve, p: float, exclusion_width: int = DEFAULT_EXCLUSION,
                  max_nodes: int = MENGER_MAX_NODES) -> MengerReport:
    """Trapezoidal triple sum of 1/R^p over node triples.

    Triples whose nodes are pairwise more than ``exclusion_width`` cells
    apart use the circumradius directly. In the excluded band the integrand
    is replaced by its coalescence limit: when two nodes merge, the
    circumcircle becomes the tangent-point circle of the merged node and the
    third one; when all three merge it becomes the osculating circle. Nodes
    that coincide in space (multiply covered curves) count as merged.
    """
    m = c.m
    w = int(exclusion_width)
    p = float(p)
    if not p > 0:
        raise ValidationError(f"p: must be positive, got {p}")
    if w < 1:
        raise ValidationError("exclusion_width: must be at least 1")
    if m < 24:
        raise ResolutionError(f"m: need at least 24 nodes, got {m}")
    if m > max_nodes:
        raise ResolutionError(f"m = {m} exceeds the cubic-cost cap {max_nodes}; resample coarser")
    X, T, closed, h = c.nodes, c.tangents, c.closed, c.h
    omega = node_weights(m, closed)
    sep = index_separation(np.arange(m), np.arange(m), m, closed)
    dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    coincident = (sep > w) & (dist <= COINCIDENCE_TOL * h)
    near = (sep <= w) | coincident
    G = _inv_tp(X, T) ** p
    kappa = _local_curvature(X, closed, w) ** p
    flags = ["coincident_nodes"] if coincident.any() else []

    def slab(i):
        nij = near[i][:, None]
        nik = near[i][None, :]
        njk = near
        count = nij.astype(int) + nik + njk
        val = _inv_circumradius(X[i], X[:, None, :], X[None, :, :]) ** p
        # one merged pair: tangent-point limit at the merged nodes toward the third
        jk = 0.5 * (G[:, i][:, None] + G[:, i][None, :])
        ij = 0.5 * (G[i][None, :] + G)
        ik = 0.5 * (G[i][:, None] + G.T)
        out = np.where(count == 0, val, 0.0)
        out = np.where((count == 1) & njk, jk, out)
        out = np.where((count == 1) & nij, ij, out)
        out = np.where((count == 1) & nik, ik, out)
        out = np.where(count >= 2, kappa[i], out)
        return float(omega[i] * (omega @ out @ omega))

    total = math.fsum(_parallel.ordered_map(slab, range(m)))
    return MengerReport(h**3 * total, p, m, w, c.length, flags)


@dataclass
class ThicknessResult:
    radius: float
    params: tuple
    scan_radius: float
    scan_nodes: int

    def to_dict(self):
        return {"thickness": self.radius, "params": list(self.params), "scan_radius": self.scan_radius,
                "scan_nodes": self.scan_nodes}


def _point_at(c: ArcCurve, s: float) -> np.ndarray:
    # cubic Hermite interpolation with the node tangents, periodic in s;
    # linear interpolation would bend the circumcircle of close triples
    u = (s % c.length) / c.h
    i = int(math.floor(u))
    f = u - i
    i0, i1 = i % c.m, (i + 1) % c.m
    f2, f3 = f * f, f * f * f
    return ((2 * f3 - 3 * f2 + 1) * c.nodes[i0] + (f3 - 2 * f2 + f) * c.h * c.tangents[i0]
            + (-2 * f3 + 3 * f2) * c.nodes[i1] + (f3 - f2) * c.h * c.tangents[i1])


def _golden(fn, lo, hi, tol):
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _circular_gap(a, b, L):
    d = abs(a - b) % L
    return min(d, L - d)


def thickness_details(c: ArcCurve, exclusion_width: int = DEFAULT_EXCLUSION,
                      scan_nodes: int = THICKNESS_SCAN_NODES, polish: int = 8, sweeps: int = 3) -> ThicknessResult:
    """Smallest circumradius over node triples, then polished between nodes.

    The scan covers all triples whose nodes are pairwise more than
    ``exclusion_width`` cells apart (on every ``ceil(m / scan_nodes)``-th
    node for large m). The ``polish`` best triples are improved by
    golden-section search on one arc parameter at a time, keeping the same
    separation, with points interpolated linearly between nodes.
    """
    if not c.closed:
        raise ValidationError("thickness needs a closed curve")
    m = c.m
    w = int(exclusion_width)
    if m < 16:
        raise ResolutionError(f"m: need at least 16 nodes, got {m}")
    stride = max(1, math.ceil(m / scan_nodes))
    idx = np.arange(0, m, stride)
    n = len(idx)
    X = c.nodes[idx]
    sep = index_separation(idx, idx, m, True)
    ok = sep > w
    upper = np.triu(np.ones((n, n), dtype=bool), 1)

    def slab(a):
        # triples a < b < c only
        rest = slice(a + 1, n)
        mask = ok[a, rest][:, None] & ok[a, rest][None, :] & ok[rest, rest] & upper[rest, rest]
        if not mask.any():
            return math.inf, (a, a, a)
        Y = X[rest]
        inv = _inv_circumradius(X[a], Y[:, None, :], Y[None, :, :])
        inv = np.where(mask, inv, -1.0)
        k = int(np.argmax(inv))
        b, cc = divmod(k, n - a - 1)
        r = 1.0 / inv[b, cc] if inv[b, cc] > 0 else math.inf
        return r, (a, a + 1 + b, a + 1 + cc)

    found = sorted(_parallel.ordered_map(slab, range(n)), key=lambda t: t[0])
    scan_r = found[0][0]
    best_r, best_s = scan_r, tuple(float(idx[v] * c.h) for v in found[0][1])
    if not math.isfinite(scan_r):
        return ThicknessResult(math.inf, best_s, math.inf, n)

    L = c.length
    tol = 1e-6 * L
    min_gap = w * c.h * (1 + 1e-9)
    half = stride * c.h
    for r0, trip in found[:polish]:
        if not math.isfinite(r0):
            break
        s = [float(idx[v] * c.h) for v in trip]
        r = r0
        for _ in range(sweeps):
            for k in range(3):
                others = [s[j] for j in range(3) if j != k]
                lo, hi = s[k] - half, s[k] + half

                def radius(x, k=k, others=others):
                    if any(_circular_gap(x, o, L) <= min_gap for o in others):
                        return math.inf
                    pts = [_point_at(c, x)] + [_point_at(c, o) for o in others]
                    try:
                        return circumradius(*pts)
                    except ValidationError:
                        return math.inf

                x, fx = _golden(radius, lo, hi, tol)
                if fx < r:
                    s[k], r = x % L, fx
        if r < best_r:
            best_r, best_s = r, tuple(s)
    return ThicknessResult(float(best_r), best_s, float(scan_r), n)


def thickness(c: ArcCurve, exclusion_width: int = DEFAULT_EXCLUSION, scan_nodes: int = THICKNESS_SCAN_NODES) -> float:
    """Minimum circumradius over triples of curve points (see :func:`thickness_details`)."""
    return thickness_details(c, exclusion_width, scan_nodes).radius


def thickness_limit_check(c: ArcCurve, q_list: Sequence[float],
                          exclusion_width: int = DEFAULT_EXCLUSION) -> List[dict]:
    """E_q^(1/q) for increasing q next to the reciprocal thickness.

    Each row holds ``energy_root`` = E_q^(1/q), ``normalized`` =
    (E_q / L^2)^(1/q) and ``inverse_thickness``. The normalized value removes
    the L^(2/q) factor that keeps the plain root above 1/thickness.
    """
    q_list = [float(q) for q in q_list]
    if not q_list or any(q <= 2 for q in q_list) or any(b <= a for a, b in zip(q_list, q_list[1:])):
        raise ValidationError("q_list: need increasing exponents, all above 2")
    if c.closed:
        th = thickness(c, exclusion_width)
        inv_th = 0.0 if math.isinf(th) else 1.0 / th
    else:
        inv_th = 0.0 if _is_straight(c) else math.nan
    rows = []
    for q in q_list:
        E = energy(c, q, exclusion_width).value
        rows.append({"q": q, "energy_root": E ** (1.0 / q), "normalized": (E / c.length**2) ** (1.0 / q),
                     "inverse_thickness": inv_th})
    return rows


def _is_straight(c: ArcCurve) -> bool:
    d = c.nodes[-1] - c.nodes[0]
    d = d / np.linalg.norm(d)
    e = c.nodes - c.nodes[0]
    perp = e - np.outer(e @ d, d)
    return bool(np.max(np.linalg.norm(perp, axis=1)) <= 1e-12 * c.length)
