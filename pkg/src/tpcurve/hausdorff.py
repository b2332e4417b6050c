"""
Exact Hausdorff distance between polygonal curves
=================================================

For a point moving along a segment of A, the squared distance to a segment
of B is a piecewise quadratic in the segment parameter (closest point at
either end of the B segment or in its interior). The distance to B is the
lower envelope of these pieces. On any stretch where one piece is the
envelope the squared distance is convex, so its maximum along the A segment
is attained at an A endpoint, a piece breakpoint, or a point where two
pieces of different B segments are equal. Evaluating the envelope at all of
those candidates gives the directed distance exactly.
"""

import numpy as np

from .curve_model import Polyline


def _segments(p: Polyline):
    pts = p.points
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    if p.closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def point_segment_distance(x, s0, s1):
    """Distances from points ``x`` (..., 3) to segments (s0, s1), broadcasting."""
    x, s0, s1 = (np.asarray(v, dtype=float) for v in (x, s0, s1))
    d = s1 - s0
    dd = np.einsum("...k,...k->...", d, d)
    dot = np.einsum("...k,...k->...", x - s0, d)
    t = np.clip(np.divide(dot, dd, out=np.zeros(np.broadcast(dot, dd).shape), where=dd > 0), 0.0, 1.0)
    diff = x - (s0 + t[..., None] * d)
    return np.sqrt(np.einsum("...k,...k->...", diff, diff))


def segment_segment_distance(p0, p1, q0, q1):
    """Distances between segment sets, broadcasting over leading axes."""
    p0, p1, q0, q1 = (np.asarray(v, dtype=float) for v in (p0, p1, q0, q1))
    cands = [
        point_segment_distance(p0, q0, q1),
        point_segment_distance(p1, q0, q1),
        point_segment_distance(q0, p0, p1),
        point_segment_distance(q1, p0, p1),
    ]
    u = p1 - p0
    v = q1 - q0
    w0 = p0 - q0
    a = np.einsum("...k,...k->...", u, u)
    b = np.einsum("...k,...k->...", u, v)
    c = np.einsum("...k,...k->...", v, v)
    d = np.einsum("...k,...k->...", u, w0)
    e = np.einsum("...k,...k->...", v, w0)
    den = a * c - b * b
    ok = den > 1e-14 * a * c
    safe = np.where(ok, den, 1.0)
    s = (b * e - c * d) / safe
    t = (a * e - b * d) / safe
    inner = ok & (s > 0) & (s < 1) & (t > 0) & (t < 1)
    diff = w0 + s[..., None] * u - t[..., None] * v
    dist = np.sqrt(np.einsum("...k,...k->...", diff, diff))
    cands.append(np.where(inner, dist, np.inf))
    return np.minimum.reduce(cands)


def _pieces(a0, da, b0, b1):
    """Quadratic pieces (coefficients and sigma domain) for one A segment.

    Returns coef (K, 3, 3) holding (c2, c1, c0) for the pieces "before",
    "interior" and "after", and sigma coefficients (s0, s1) of the
    unclamped projection parameter ``s0 + s1 * tau``.
    """
    db = b1 - b0
    ll = np.einsum("kj,kj->k", db, db)
    u0 = a0[None, :] - b0
    u1 = a0[None, :] - b1
    sig0 = np.einsum("kj,kj->k", u0, db) / ll
    sig1 = (db @ da) / ll
    pu = u0 - (np.einsum("kj,kj->k", u0, db) / ll)[:, None] * db
    pda = da[None, :] - ((db @ da) / ll)[:, None] * db
    c2e = float(da @ da)
    coef = np.empty((len(db), 3, 3))
    coef[:, 0] = np.column_stack([np.full(len(db), c2e), 2 * (u0 @ da), np.einsum("kj,kj->k", u0, u0)])
    coef[:, 1] = np.column_stack([np.einsum("kj,kj->k", pda, pda), 2 * np.einsum("kj,kj->k", pu, pda),
                                  np.einsum("kj,kj->k", pu, pu)])
    coef[:, 2] = np.column_stack([np.full(len(db), c2e), 2 * (u1 @ da), np.einsum("kj,kj->k", u1, u1)])
    return coef, sig0, sig1


def _quadratic_roots(c2, c1, c0):
    """Real roots of c2 t^2 + c1 t + c0, NaN where absent (vectorized)."""
    r1 = np.full(c2.shape, np.nan)
    r2 = np.full(c2.shape, np.nan)
    scale = np.abs(c2) + np.abs(c1) + np.abs(c0)
    lin = np.abs(c2) <= 1e-14 * np.maximum(scale, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(lin & (c1 != 0), -c0 / c1, r1)
        disc = c1 * c1 - 4 * c2 * c0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        # numerically stable form
        qv = -0.5 * (c1 + np.copysign(sq, c1))
        quad = ~lin & (disc >= 0)
        r1 = np.where(quad, qv / c2, r1)
        r2 = np.where(quad & (qv != 0), c0 / qv, r2)
    return r1, r2


def directed_hausdorff(a: Polyline, b: Polyline) -> float:
    """sup over points of ``a`` of the distance to the polygonal image of ``b``."""
    a0s, a1s = _segments(a)
    b0s, b1s = _segments(b)
    # vertex-to-segment distances give the envelope at A vertices
    va = np.vstack([a0s, a1s[-1:]]) if not a.closed else a0s
    dv = point_segment_distance(va[:, None, :], b0s[None, :, :], b1s[None, :, :])
    best = float(np.min(dv, axis=1).max())
    ss = segment_segment_distance(a0s[:, None, :], a1s[:, None, :], b0s[None, :, :], b1s[None, :, :])
    nv = len(va)
    for s in range(len(a0s)):
        d_start = dv[s]
        d_end = dv[(s + 1) % nv]
        ub = float(np.min(np.maximum(d_start, d_end)))
        if ub <= best:
            continue
        rel = np.flatnonzero(ss[s] <= ub * (1 + 1e-12) + 1e-300)
        if len(rel) < 2:
            continue
        a0 = a0s[s]
        da = a1s[s] - a0
        coef, sig0, sig1 = _pieces(a0, da, b0s[rel], b1s[rel])
        cands = [np.array([0.0, 1.0])]
        with np.errstate(divide="ignore", invalid="ignore"):
            for level in (0.0, 1.0):
                tb = (level - sig0) / sig1
                cands.append(tb[np.isfinite(tb)])
        K = len(rel)
        flat = coef.reshape(K * 3, 3)
        owner = np.repeat(np.arange(K), 3)
        i, j = np.triu_indices(K * 3, 1)
        keep = owner[i] != owner[j]
        i, j = i[keep], j[keep]
        diff = flat[i] - flat[j]
        r1, r2 = _quadratic_roots(diff[:, 0], diff[:, 1], diff[:, 2])
        cands.extend([r1, r2])
        tau = np.concatenate(cands)
        tau = tau[np.isfinite(tau) & (tau >= 0.0) & (tau <= 1.0)]
        tau = np.unique(tau)
        pts = a0[None, :] + tau[:, None] * da[None, :]
        env = point_segment_distance(pts[:, None, :], b0s[rel][None, :, :], b1s[rel][None, :, :]).min(axis=1)
        best = max(best, float(env.max()))
    return best


def hausdorff_distance(a: Polyline, b: Polyline) -> float:
    """Symmetric Hausdorff distance between the images of two polylines."""
    if a.closed == b.closed and a.points.shape == b.points.shape and np.array_equal(a.points, b.points):
        return 0.0
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))
