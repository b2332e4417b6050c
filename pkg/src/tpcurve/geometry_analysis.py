"""Flatness and shape diagnostics: beta numbers, the omega_E modulus, double cones and bi-Lipschitz ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from . import _parallel
from .curve_model import ArcCurve
from .errors import ResolutionError, ValidationError
from .tp_energy import DEFAULT_EXCLUSION, energy, filled_integrand

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ANGLE_GRID = 360


def kappa(q: float) -> float:
    """Beta decay exponent (q - 2) / (q + 4)."""
    return (q - 2.0) / (q + 4.0)


@dataclass
class BetaResult:
    value: float
    direction: np.ndarray
    count: int
    flags: List[str] = field(default_factory=list)


def _center(c: ArcCurve, x) -> np.ndarray:
    if isinstance(x, (int, np.integer)):
        if not -c.m <= x < c.m:
            raise ValidationError(f"x: node index {x} out of range")
        return c.nodes[x]
    x = np.asarray(x, dtype=float)
    if x.shape != (c.dim,):
        raise ValidationError(f"x: expected a point of dimension {c.dim}")
    return x


def _line_spread(E, U):
    """max_k dist(E_k, line along U_j) for each row direction U_j."""
    proj = E @ U.T
    sq = np.einsum("ij,ij->i", E, E)[:, None] - proj**2
    return np.sqrt(np.maximum(sq, 0.0)).max(axis=0)


def _golden_min(fn, lo, hi, tol=1e-12):
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


def _plane_basis(E):
    # orthonormal basis of the span when the cloud is (numerically) planar
    _, s, vt = np.linalg.svd(E, full_matrices=False)
    if E.shape[1] == 2:
        return np.eye(2)
    if len(s) < 3 or s[2] <= 1e-12 * max(s[0], 1e-300):
        return vt[:2]
    return None


def beta_number_details(c: ArcCurve, x, d: float) -> BetaResult:
    """Beta number of ``c`` at ``x`` (node index or point) and scale ``d``.

    Lines through ``x`` are scored by the largest node distance inside the
    closed ball B(x, d). The search starts from the direction to every node
    in the ball, the principal axis of the ball's second moment about ``x``
    and a uniform angular grid, then refines the best one by golden-section
    search on the angle for a planar cloud. For a spatial cloud the best
    few starts are polished by solving the minimax problem in epigraph
    form with SLSQP.
    """
    if not d > 0:
        raise ValidationError(f"d: must be positive, got {d}")
    xc = _center(c, x)
    E = c.nodes - xc
    r = np.linalg.norm(E, axis=1)
    E = E[(r <= d) & (r > 0)]
    if len(E) == 0:
        return BetaResult(0.0, np.zeros(c.dim), 0, ["empty_ball"])
    dirs = E / np.linalg.norm(E, axis=1)[:, None]
    w, v = np.linalg.eigh(E.T @ E)
    cands = np.vstack([dirs, v[:, -1][None, :]])
    basis = _plane_basis(E)
    if basis is not None:
        F = E @ basis.T
        ang = np.arctan2(cands @ basis[1], cands @ basis[0]) % math.pi
        ang = np.concatenate([ang, np.linspace(0.0, math.pi, ANGLE_GRID, endpoint=False)])
        U = np.column_stack([np.cos(ang), np.sin(ang)])
        vals = _line_spread(F, U)
        k = int(np.argmin(vals))
        step = math.pi / ANGLE_GRID

        def f(t):
            return float(_line_spread(F, np.array([[math.cos(t), math.sin(t)]]))[0])

        t, ft = _golden_min(f, ang[k] - step, ang[k] + step)
        if ft < vals[k]:
            best = math.cos(t) * basis[0] + math.sin(t) * basis[1]
            bval = ft
        else:
            best = cands[k] if k < len(cands) else math.cos(ang[k]) * basis[0] + math.sin(ang[k]) * basis[1]
            bval = float(vals[k])
    else:
        grid = _fibonacci_sphere(2000)
        U = np.vstack([cands, grid])
        U /= np.linalg.norm(U, axis=1)[:, None]
        vals = _line_spread(E, U)
        k = int(np.argmin(vals))
        best, bval = U[k], float(vals[k])
        for start in _distinct_starts(U, vals, 4):
            u = _refine_line(E / d, start)
            v = float(_line_spread(E, u[None, :])[0])
            if v < bval:
                best, bval = u, v
    return BetaResult(min(1.0, bval / d), best, len(E))


def _distinct_starts(U, vals, n, min_angle=0.05):
    # best grid directions, skipping lines close to one already taken
    picks = []
    for k in np.argsort(vals, kind="stable"):
        u = U[k]
        if all(abs(float(u @ p)) < math.cos(min_angle) for p in picks):
            picks.append(u)
            if len(picks) == n:
                break
    return picks


def _refine_line(P, u0):
    """Local minimizer of max_k dist(P_k, line along u) in epigraph form."""
    sq = np.einsum("ij,ij->i", P, P)
    t0 = float(np.max(sq - (P @ u0) ** 2))
    cons = (
        {"type": "ineq", "fun": lambda z: z[3] - sq + (P @ z[:3]) ** 2,
         "jac": lambda z: np.column_stack([2.0 * (P @ z[:3])[:, None] * P, np.ones(len(P))])},
        {"type": "eq", "fun": lambda z: np.array([z[:3] @ z[:3] - 1.0]),
         "jac": lambda z: np.concatenate([2.0 * z[:3], [0.0]])[None, :]},
    )
    res = optimize.minimize(lambda z: z[3], np.concatenate([u0, [t0]]), jac=lambda z: np.array([0, 0, 0, 1.0]),
                            constraints=cons, method="SLSQP", options={"ftol": 1e-15, "maxiter": 200})
    u = res.x[:3]
    norm = np.linalg.norm(u)
    return u / norm if np.all(np.isfinite(u)) and norm > 0 else u0


def _fibonacci_sphere(n):
    # half sphere suffices for lines
    k = np.arange(n) + 0.5
    z = k / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    rho = np.sqrt(1.0 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def beta_number(c: ArcCurve, x, d: float) -> float:
    return beta_number_details(c, x, d).value


@dataclass
class BetaProfile:
    radii: List[float]
    sup_beta: List[float]
    fitted_exponent: float
    fit_range: List[int]
    q: float
    kappa: float
    verdict: str
    centers: int

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def loglog_slope(x, y):
    """Least-squares slope and intercept of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    A = np.column_stack([lx, np.ones_like(lx)])
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0]), float(sol[1])


def beta_profile(c: ArcCurve, q: float, scales: Sequence[float], centers: Optional[Sequence[int]] = None,
                 max_centers: int = 128) -> BetaProfile:
    """Sup over centers of beta numbers at each scale, and the fitted decay exponent.

    ``centers`` are node indices; by default every node, thinned to at most
    ``max_centers`` evenly spaced nodes. The verdict is ``"pass"`` when the
    fitted exponent is at least kappa(q) - 0.1.
    """
    radii = sorted({float(s) for s in scales}, reverse=True)
    if len(radii) < 3:
        raise ValidationError("scales: need at least 3 distinct scales")
    if radii[-1] <= 0:
        raise ValidationError("scales: must be positive")
    if centers is None:
        step = max(1, math.ceil(c.m / max_centers))
        centers = list(range(0, c.m, step))
    centers = [int(i) for i in centers]

    def at_scale(d):
        return max(beta_number(c, i, d) for i in centers)

    sup_beta = list(_parallel.ordered_map(at_scale, radii))
    fit = [i for i, b in enumerate(sup_beta) if b > 0]
    if len(fit) >= 2:
        slope, _ = loglog_slope([radii[i] for i in fit], [sup_beta[i] for i in fit])
    else:
        slope = math.inf  # flat at every scale: beta vanishes identically
    k = kappa(q)
    verdict = "pass" if slope >= k - 0.1 else "fail"
    return BetaProfile(radii, sup_beta, slope, fit, float(q), k, verdict, len(centers))


def omega_E_estimate(c: ArcCurve, d: float, q: float = 2.0, exclusion_width: int = DEFAULT_EXCLUSION) -> float:
    """Contiguous-window lower bound for the omega_E modulus at scale ``d``.

    Maximizes (int_A int_B r^-q)^(1/6) over pairs of parameter windows of
    length d/100 starting at nodes. Windows end with a fractional node
    weight, so the modulus is nondecreasing in ``d``.
    """
    if not q >= 2:
        raise ValidationError(f"q: must be at least 2, got {q}")
    if not d > 0:
        raise ValidationError(f"d: must be positive, got {d}")
    ell = d / 100.0
    h = c.h
    if ell < h:
        raise ResolutionError(f"window length d/100 = {ell:.3g} is below the grid spacing {h:.3g}")
    full = int(math.floor(ell / h + 1e-12))
    frac = ell / h - full
    v = np.full(full + (1 if frac > 1e-12 else 0), h)
    if frac > 1e-12:
        v[-1] = frac * h
    G, _ = filled_integrand(c, q, exclusion_width)
    m = c.m
    K = len(v)
    if c.closed:
        rows = sum(v[a] * np.roll(G, -a, axis=0) for a in range(K))
        S = sum(v[b] * np.roll(rows, -b, axis=1) for b in range(K))
    else:
        n = m - K + 1
        rows = sum(v[a] * G[a:a + n, :] for a in range(K))
        S = sum(v[b] * rows[:, b:b + n] for b in range(K))
    return float(max(S.max(), 0.0) ** (1.0 / 6.0))


@dataclass
class ConeCheckResult:
    s: float
    t: float
    d: float
    phi: float
    contained: bool
    worst_point: Optional[np.ndarray]
    worst_excess: float
    checked: int

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["worst_point"] = None if self.worst_point is None else self.worst_point.tolist()
        return out


def _line_angle(V, axis):
    # angle in [0, pi/2] between the lines spanned by the rows of V and axis
    dot = np.abs(V @ axis)
    cr = np.sqrt(np.maximum(np.einsum("ij,ij->i", V, V) * (axis @ axis) - (V @ axis) ** 2, 0.0))
    return np.arctan2(cr, dot)


def cone_containment_check(c: ArcCurve, s: float, t: float, phi: float) -> ConeCheckResult:
    """Test whether the nodes in B(x, 2d) and B(y, 2d) lie in both double cones of opening ``phi``.

    ``x`` and ``y`` are the nodes nearest to the parameters ``s`` and ``t``.
    A point lies in the cone with vertex ``x`` when the line through ``x``
    and the point makes an angle below phi/2 with ``y - x``; the vertex
    itself counts as inside. ``worst_excess`` is the largest angle minus
    phi/2 over both cones.
    """
    if not 0 < phi < math.pi / 2:
        raise ValidationError("phi: must lie in (0, pi/2)")
    i, j = c.node_index(s), c.node_index(t)
    x, y = c.nodes[i], c.nodes[j]
    d = float(np.linalg.norm(y - x))
    if d == 0:
        raise ValidationError("s, t: the two curve points coincide")
    Z = c.nodes
    inside = (np.linalg.norm(Z - x, axis=1) <= 2 * d) & (np.linalg.norm(Z - y, axis=1) <= 2 * d)
    Z = Z[inside]
    ex = np.full(len(Z), -math.inf)
    for vtx, other in ((x, y), (y, x)):
        V = Z - vtx
        nz = np.einsum("ij,ij->i", V, V) > 0
        ang = np.full(len(Z), -math.inf)
        ang[nz] = _line_angle(V[nz], other - vtx) - phi / 2
        ex = np.maximum(ex, ang)
    k = int(np.argmax(ex)) if len(ex) else -1
    worst = float(ex[k]) if k >= 0 else -math.inf
    return ConeCheckResult(float(s), float(t), d, float(phi), bool(worst < 0),
                           Z[k].copy() if k >= 0 else None, worst, int(len(Z)))


@dataclass
class BilipschitzReport:
    min_ratio: float
    max_ratio: float
    argmin_pair: tuple
    d_max: float

    def to_dict(self):
        return {"min_ratio": self.min_ratio, "max_ratio": self.max_ratio,
                "argmin_pair": list(self.argmin_pair), "d_max": self.d_max}


def _cumulative(c: ArcCurve):
    edges = np.linalg.norm(np.diff(c.nodes, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(edges)])
    total = cum[-1] + (np.linalg.norm(c.nodes[0] - c.nodes[-1]) if c.closed else 0.0)
    return cum, total


def bilipschitz_report(c: ArcCurve, d_max: float) -> BilipschitzReport:
    """Extremes of chord over intrinsic distance for node pairs at most ``d_max`` apart.

    Intrinsic distance is measured along the node polygon (the shorter way
    round for closed curves), so the chord never exceeds it.
    """
    if not d_max > 0:
        raise ValidationError("d_max: must be positive")
    cum, total = _cumulative(c)
    X = c.nodes
    m = c.m

    def work(block):
        rows = np.arange(block.start, block.stop)
        arc = np.abs(cum[rows, None] - cum[None, :])
        if c.closed:
            arc = np.minimum(arc, total - arc)
        chord = np.linalg.norm(X[rows, None, :] - X[None, :, :], axis=2)
        use = (arc > 0) & (arc <= d_max * (1 + 1e-12))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(use, chord / np.where(use, arc, 1.0), np.nan)
        if not use.any():
            return math.inf, -math.inf, None
        k = int(np.nanargmin(ratio))
        a, b = divmod(k, m)
        return float(ratio[a, b]), float(np.nanmax(ratio)), (int(rows[a]), int(b))

    lo, hi, pair = math.inf, -math.inf, None
    for r_lo, r_hi, pr in _parallel.ordered_map(work, _parallel.row_blocks(m, m * 3)):
        if r_lo < lo:
            lo, pair = r_lo, pr
        hi = max(hi, r_hi)
    if pair is None:
        raise ResolutionError("d_max is below the node spacing")
    return BilipschitzReport(lo, hi, tuple(sorted(pair)), float(d_max))


@dataclass
class SecantFrontier:
    q: float
    energy: float
    distances: List[float]
    eps_min: List[float]
    min_c0: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def secant_inclusion_frontier(c: ArcCurve, q: float, distances: Sequence[float],
                              centers: Optional[Sequence[int]] = None,
                              exclusion_width: int = DEFAULT_EXCLUSION) -> SecantFrontier:
    """Empirical pass/fail frontier of the secant-line inclusion for pairs at distance ``d``.

    For every center node x and partner node y with |x - y| closest to
    ``d``, the nodes in B(x, 2d) must lie within 20 eps d of the line
    through x and y. ``eps_min[k]`` is the smallest eps that works for all
    centers at ``distances[k]`` (capped at 1/200). ``min_c0`` is the
    smallest constant for which the energy hypothesis
    eps^(4+q) d^(2-q) >= c0 E excludes every failing (eps, d).
    """
    E = energy(c, q, exclusion_width).value
    if centers is None:
        step = max(1, c.m // 32)
        centers = list(range(0, c.m, step))
    X = c.nodes
    eps_min = []
    dvals = []
    for d in distances:
        worst = 0.0
        used = []
        for i in centers:
            r = np.linalg.norm(X - X[i], axis=1)
            j = int(np.argmin(np.abs(r - d)))
            dd = float(r[j])
            if dd == 0:
                continue
            used.append(dd)
            u = (X[j] - X[i]) / dd
            V = X[r <= 2 * dd] - X[i]
            dist = np.sqrt(np.maximum(np.einsum("ij,ij->i", V, V) - (V @ u) ** 2, 0.0))
            worst = max(worst, float(dist.max()) / (20.0 * dd))
        dvals.append(float(np.mean(used)) if used else float(d))
        eps_min.append(min(worst, 1.0 / 200.0))
    min_c0 = max((e ** (4 + q) * dv ** (2 - q) / E for e, dv in zip(eps_min, dvals)), default=0.0) if E > 0 else 0.0
    return SecantFrontier(float(q), float(E), dvals, eps_min, float(min_c0))
