"""
Tangent-point energy
====================

Discrete tangent-point energy on arclength-uniform node curves.

The integrand of an ordered node pair ``(i, j)`` is ``1 / r**q`` with ``r``
the radius of the circle tangent to the curve at node ``i`` that passes
through node ``j``. The double integral over the parameter square is a
uniform-grid trapezoidal sum with two pieces of diagonal handling:

* pairs closer than ``exclusion_width`` grid cells are not evaluated. With
  ``diagonal="fill"`` (default) each such cell takes the value of the nearest
  evaluated cell of the same row on the same side; the diagonal cell takes
  the mean of both sides. With ``diagonal="exclude"`` they contribute zero.
* off-diagonal pairs of numerically coincident nodes (a multiply covered
  curve) are a null set and are dropped; pairs with ``r < h`` are capped at
  ``h**-q``. Both raise report flags.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

import numpy as np

from . import _parallel
from .curve_model import ArcCurve, Polyline, ShapeSpec, generate, neighbor_indices, resample_arclength
from .errors import ResolutionError, ValidationError

DEFAULT_EXCLUSION = 2
DIAGONAL_MODES = ("fill", "exclude")
DIVERGENCE_RATIO = 1.1
COINCIDENCE_TOL = 1e-9  # relative to h


@dataclass
class EnergyReport:
    value: float
    q: float
    m: int
    exclusion_width: int
    max_integrand: float
    length: float
    diagonal: str = "fill"
    flags: List[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def tangent_point_radius(base, tangent, target) -> float:
    """Radius of the circle tangent to ``tangent`` at ``base`` through ``target``.

    Zero when the points coincide, infinite when ``target - base`` is
    parallel to the tangent line.
    """
    base = np.asarray(base, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    target = np.asarray(target, dtype=float)
    if abs(np.linalg.norm(tangent) - 1.0) > 1e-9:
        raise ValidationError("tangent must be a unit vector")
    e = target - base
    d2 = float(e @ e)
    if d2 == 0.0:
        return 0.0
    perp = e - (e @ tangent) * tangent
    dist = float(np.linalg.norm(perp))
    if dist <= 1e-12 * math.sqrt(d2):
        return math.inf
    return d2 / (2.0 * dist)


def node_weights(m: int, closed: bool) -> np.ndarray:
    w = np.ones(m)
    if not closed:
        w[0] = w[-1] = 0.5
    return w


def index_separation(rows, cols, m: int, closed: bool) -> np.ndarray:
    d = np.abs(np.asarray(rows)[:, None] - np.asarray(cols)[None, :])
    if closed:
        d = np.minimum(d, m - d)
    return d


def _check_args(m, q, exclusion_width, diagonal, min_nodes=16):
    if not q > 0:
        raise ValidationError(f"q: must be positive, got {q}")
    if int(exclusion_width) < 1:
        raise ValidationError(f"exclusion_width: must be at least 1, got {exclusion_width}")
    if diagonal not in DIAGONAL_MODES:
        raise ValidationError(f"diagonal: must be one of {DIAGONAL_MODES}, got {diagonal!r}")
    if m < min_nodes:
        raise ResolutionError(f"m: need at least {min_nodes} nodes, got {m}")
    if m < 2 * int(exclusion_width) + 3:
        raise ResolutionError("exclusion band wider than the curve")


def _raw_block(nodes, tangents, rows, q, h, closed, w):
    """Evaluated integrand on a row block, before diagonal fill.

    Returns (F, g, extras) where ``g = 1/r`` after capping and ``extras``
    holds the intermediate arrays the gradient needs.
    """
    m = len(nodes)
    rows = np.asarray(rows)
    e = nodes[None, :, :] - nodes[rows, None, :]
    t = tangents[rows, None, :]
    a = np.einsum("ijk,ijk->ij", e, e)
    b = np.einsum("ijk,ijk->ij", e, t)
    perp = e - b[..., None] * t
    p = np.sqrt(np.einsum("ijk,ijk->ij", perp, perp))
    sep = index_separation(rows, np.arange(m), m, closed)
    evaluated = sep > w
    coincident = evaluated & (np.sqrt(a) <= COINCIDENCE_TOL * h)
    live = evaluated & ~coincident
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(live, 2.0 * p / np.where(a > 0, a, 1.0), 0.0)
    capped = live & (g > 1.0 / h)
    g = np.where(capped, 1.0 / h, g)
    F = g**q
    return F, g, dict(e=e, a=a, b=b, perp=perp, p=p, live=live, capped=capped, coincident=coincident)


def _fill_sources(rows, m, closed, w):
    """Band cells of a row block and the evaluated cell each one copies.

    Returns a list of (row_positions, band_cols, src_cols, share). The
    diagonal cell appears once per side with share 0.5 when both sides have
    an evaluated cell, otherwise once with share 1.
    """
    rows = np.asarray(rows)

    def wrap(ix):
        if closed:
            return ix % m, np.ones(len(ix), bool)
        return ix, (ix >= 0) & (ix < m)

    out = []
    for side in (1, -1):
        own, own_ok = wrap(rows + side * (w + 1))
        other, other_ok = wrap(rows - side * (w + 1))
        src = np.where(own_ok, own, other)
        for delta in range(1, w + 1):
            col, inside = wrap(rows + side * delta)
            sel = inside & (own_ok | other_ok)
            out.append((np.flatnonzero(sel), col[sel], src[sel], np.ones(int(sel.sum()))))
        share = np.where(own_ok, np.where(other_ok, 0.5, 1.0), 0.0)
        sel = share > 0
        out.append((np.flatnonzero(sel), rows[sel], own[sel], share[sel]))
    return out


def _filled_block(nodes, tangents, rows, q, h, closed, w, diagonal):
    F, _, ex = _raw_block(nodes, tangents, rows, q, h, closed, w)
    G = F.copy()
    if diagonal == "fill":
        m = len(nodes)
        acc = np.zeros_like(G)
        diag_done = np.zeros(G.shape, bool)
        for pos, col, src, share in _fill_sources(rows, m, closed, w):
            is_diag = col == np.asarray(rows)[pos]
            vals = F[pos, src] * share
            # diagonal cells accumulate both half shares
            np.add.at(acc, (pos, col), np.where(is_diag, vals, 0.0))
            G[pos[~is_diag], col[~is_diag]] = vals[~is_diag]
            diag_done[pos[is_diag], col[is_diag]] = True
        G[diag_done] = acc[diag_done]
    flags = set()
    if ex["capped"].any():
        flags.add("near_contact")
    if ex["coincident"].any():
        flags.add("coincident_nodes")
    return G, F, flags


def filled_integrand(c: ArcCurve, q: float, exclusion_width: int = DEFAULT_EXCLUSION,
                     diagonal: str = "fill"):
    """Full ``m x m`` integrand matrix after diagonal handling, plus flags."""
    _check_args(c.m, q, exclusion_width, diagonal)
    m = c.m

    def work(block):
        G, _, fl = _filled_block(c.nodes, c.tangents, np.arange(block.start, block.stop), q, c.h,
                                 c.closed, int(exclusion_width), diagonal)
        return G, fl

    parts = _parallel.ordered_map(work, _parallel.row_blocks(m, m))
    G = np.vstack([g for g, _ in parts])
    flags = set().union(*[fl for _, fl in parts])
    return G, sorted(flags)


def _energy_sum(nodes, tangents, closed, h, q, w, diagonal):
    m = len(nodes)
    omega = node_weights(m, closed)

    def work(block):
        rows = np.arange(block.start, block.stop)
        G, F, flags = _filled_block(nodes, tangents, rows, q, h, closed, w, diagonal)
        s = float(np.sum((omega[rows, None] * omega[None, :]) * G))
        return s, float(F.max()), flags

    parts = _parallel.ordered_map(work, _parallel.row_blocks(m, m))
    total = float(np.sum([s for s, _, _ in parts]))
    fmax = max(f for _, f, _ in parts)
    flags = set().union(*[fl for _, _, fl in parts])
    return total, fmax, flags


def energy(c: ArcCurve, q: float, exclusion_width: int = DEFAULT_EXCLUSION,
           diagonal: str = "fill") -> EnergyReport:
    """Trapezoidal double sum of ``1/r**q`` over all ordered node pairs."""
    w = int(exclusion_width)
    _check_args(c.m, q, w, diagonal)
    total, fmax, flags = _energy_sum(c.nodes, c.tangents, c.closed, c.h, float(q), w, diagonal)
    return EnergyReport(c.h**2 * total, float(q), c.m, w, fmax, c.length, diagonal, sorted(flags))


def nodes_energy(nodes, closed: bool, q: float, exclusion_width: int = DEFAULT_EXCLUSION,
                 diagonal: str = "fill") -> float:
    """Energy of the polygon with vertices ``nodes``, read as uniform nodes.

    The grid spacing is the polygon length over the number of cells, so this
    is a smooth function of the node coordinates away from the capped and
    coincident branches. It is the objective of the gradient flow.
    """
    from .curve_model import estimate_tangents, polygon_length

    nodes = np.asarray(nodes, dtype=float)
    m = len(nodes)
    w = int(exclusion_width)
    _check_args(m, q, w, diagonal)
    h = polygon_length(nodes, closed) / (m if closed else m - 1)
    total, _, _ = _energy_sum(nodes, estimate_tangents(nodes, closed), closed, h, float(q), w, diagonal)
    return h**2 * total


def pair_weight_block(rows, m, closed, w, diagonal, coincident):
    """Dense weights ``W`` with ``sum(W * F) == sum(omega_i omega_j G)``."""
    rows = np.asarray(rows)
    omega = node_weights(m, closed)
    sep = index_separation(rows, np.arange(m), m, closed)
    W = np.where(sep > w, omega[rows, None] * omega[None, :], 0.0)
    if diagonal == "fill":
        for pos, col, src, share in _fill_sources(rows, m, closed, w):
            np.add.at(W, (pos, src), omega[rows[pos]] * omega[col] * share)
    W[coincident] = 0.0
    return W


def refine_energy(p, q: float, levels: Sequence[int], exclusion_width: int = DEFAULT_EXCLUSION,
                  diagonal: str = "fill"):
    """Energies at increasing resolutions and a convergence verdict.

    ``exclusion_width`` stays fixed in grid cells, so the excluded band
    shrinks with ``h``. The sequence is ``"diverging"`` when the values
    increase strictly and the last ratio exceeds ``DIVERGENCE_RATIO``.
    """
    levels = [int(x) for x in levels]
    if len(levels) < 3 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValidationError("levels: need at least 3 strictly increasing node counts")
    if isinstance(p, ShapeSpec):
        p = generate(p)
    reports = [energy(resample_arclength(p, m), q, exclusion_width, diagonal) for m in levels]
    vals = [r.value for r in reports]
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    last_ratio = vals[-1] / vals[-2] if vals[-2] > 0 else (math.inf if vals[-1] > 0 else 1.0)
    verdict = "diverging" if increasing and last_ratio > DIVERGENCE_RATIO else "converged"
    return RefinementResult(reports, verdict, last_ratio)


@dataclass
class RefinementResult:
    reports: List[EnergyReport]
    verdict: str
    last_ratio: float

    @property
    def values(self):
        return [r.value for r in self.reports]

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "last_ratio": self.last_ratio,
            "levels": [r.to_dict() for r in self.reports],
        }


def window_indices(c: ArcCurve, u: float, v: float) -> np.ndarray:
    """Node indices of the sub-arc [u, v], wrapping for closed curves."""
    if not v > u:
        raise ValidationError("need u < v")
    if c.closed and v - u > c.length * (1 + 1e-12):
        raise ValidationError("sub-arc longer than one period")
    i0 = int(round(u / c.h))
    i1 = int(round(v / c.h))
    if i1 - i0 < 4:
        raise ResolutionError(f"sub-arc [{u}, {v}] spans fewer than 4 grid cells")
    idx = np.arange(i0, i1 + 1)
    if c.closed:
        return idx % c.m
    if i0 < 0 or i1 >= c.m:
        raise ValidationError(f"sub-arc [{u}, {v}] leaves [0, {c.length}]")
    return idx


def window_sum(G, idx, h) -> float:
    """Trapezoidal sum of ``G`` over the square ``idx x idx``."""
    omega = np.ones(len(idx))
    omega[0] = omega[-1] = 0.5
    block = G[np.ix_(idx, idx)]
    return float(h**2 * (omega @ block @ omega))


def local_energy(c: ArcCurve, u: float, v: float, q: float,
                 exclusion_width: int = DEFAULT_EXCLUSION, diagonal: str = "fill") -> float:
    """Energy of the pairs with both parameters in the sub-arc [u, v]."""
    if c.closed and v - u >= c.length * (1 - 1e-12):
        return energy(c, q, exclusion_width, diagonal).value
    idx = window_indices(c, u, v)
    G, _ = filled_integrand(c, q, exclusion_width, diagonal)
    return window_sum(G, idx, c.h)


def scale_invariant_energy(c: ArcCurve, q: float, exclusion_width: int = DEFAULT_EXCLUSION,
                           diagonal: str = "fill") -> float:
    return c.length ** (q - 2) * energy(c, q, exclusion_width, diagonal).value
