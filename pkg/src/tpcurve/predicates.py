"""Exact orientation predicates and segment/triangle tests.

Float coordinates are converted to :class:`fractions.Fraction`, which is
exact for every finite double, so all signs below are free of rounding.
"""

from fractions import Fraction
from typing import Sequence, Tuple

Point = Tuple[Fraction, ...]


def exact(p) -> Point:
    return tuple(Fraction(float(x)) for x in p)


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _cross3(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def orient2d(a, b, c) -> int:
    """Sign of the signed area of (a, b, c): +1 counterclockwise, 0 collinear."""
    return _sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def orient3d(a, b, c, d) -> int:
    """Sign of det[b-a, c-a, d-a]; 0 when the four points are coplanar."""
    u, v, w = _sub(b, a), _sub(c, a), _sub(d, a)
    n = _cross3(u, v)
    return _sign(n[0] * w[0] + n[1] * w[1] + n[2] * w[2])


def triangle_normal(a, b, c):
    return _cross3(_sub(b, a), _sub(c, a))


def projector(normal):
    """Coordinate projection dropping the axis where ``normal`` is largest."""
    k = max(range(3), key=lambda i: abs(normal[i]))
    keep = [i for i in range(3) if i != k]
    return lambda p: (p[keep[0]], p[keep[1]])


def on_segment2d(p, a, b) -> bool:
    """p collinear with (a, b) and within its bounding box."""
    return (orient2d(a, b, p) == 0 and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_intersect2d(a, b, c, d) -> bool:
    """Closed segments [a, b] and [c, d] share at least one point."""
    o1, o2 = orient2d(a, b, c), orient2d(a, b, d)
    o3, o4 = orient2d(c, d, a), orient2d(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return (on_segment2d(c, a, b) or on_segment2d(d, a, b)
            or on_segment2d(a, c, d) or on_segment2d(b, c, d))


def point_in_triangle2d(p, a, b, c) -> bool:
    """p in the closed triangle (a, b, c), either orientation."""
    s = (orient2d(a, b, p), orient2d(b, c, p), orient2d(c, a, p))
    return not (min(s) < 0 < max(s))


def segment_triangle2d(p, q, a, b, c) -> bool:
    if point_in_triangle2d(p, a, b, c) or point_in_triangle2d(q, a, b, c):
        return True
    return any(segments_intersect2d(p, q, x, y) for x, y in ((a, b), (b, c), (c, a)))


def segment_triangle3d(p, q, a, b, c) -> bool:
    """Closed segment [p, q] meets the closed non-degenerate triangle (a, b, c)."""
    op, oq = orient3d(a, b, c, p), orient3d(a, b, c, q)
    if op * oq > 0:
        return False
    proj = projector(triangle_normal(a, b, c))
    A, B, C = proj(a), proj(b), proj(c)
    if op == 0 and oq == 0:
        return segment_triangle2d(proj(p), proj(q), A, B, C)
    if op == 0:
        return point_in_triangle2d(proj(p), A, B, C)
    if oq == 0:
        return point_in_triangle2d(proj(q), A, B, C)
    s = (orient3d(p, q, a, b), orient3d(p, q, b, c), orient3d(p, q, c, a))
    return not (min(s) < 0 < max(s))


def in_closed_cone2d(d, u1, u2) -> bool:
    """Direction ``d`` lies in the closed convex cone spanned by u1, u2 (angle < pi)."""
    o = (0, 0)
    s = orient2d(o, u1, u2)
    return orient2d(o, u1, d) * s >= 0 and orient2d(o, d, u2) * s >= 0


def segments_intersect3d(a, b, c, d) -> bool:
    """Closed segments in 3D share a point (exact)."""
    if orient3d(a, b, c, d) != 0:
        return False
    n = _cross3(_sub(b, a), _sub(c, a))
    if all(x == 0 for x in n):
        n = _cross3(_sub(b, a), _sub(d, a))
    if all(x == 0 for x in n):
        # all four collinear: pick any plane containing the line
        u = _sub(b, a) if any(_sub(b, a)) else _sub(d, c)
        k = max(range(3), key=lambda i: abs(u[i]))
        e = [0, 0, 0]
        e[(k + 1) % 3] = 1
        n = _cross3(u, tuple(e))
    proj = projector(n)
    return segments_intersect2d(proj(a), proj(b), proj(c), proj(d))


def lift(points: Sequence) -> list:
    """Exact copies of the points, padded to 3D."""
    out = []
    for p in points:
        e = exact(p)
        out.append(e if len(e) == 3 else e + (Fraction(0),))
    return out
