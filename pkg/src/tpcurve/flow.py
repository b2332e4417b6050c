"""Fixed-length gradient descent on the discrete tangent-point energy."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from . import _parallel
from .curve_model import (ArcCurve, ShapeSpec, arc_curve, estimate_tangents, neighbor_indices,
                          polygon_length, resample_arclength)
from .errors import NumericalError, ResolutionError, ValidationError
from .tp_energy import (DEFAULT_EXCLUSION, _check_args, _raw_block, energy, nodes_energy,
                        pair_weight_block)

logger = logging.getLogger("tpcurve.flow")

ARMIJO_C = 1e-4
BACKTRACK = 0.5
REPARAM_EVERY = 10
STALL_WINDOW = 20


@dataclass
class GradientResult:
    gradient: np.ndarray
    energy: float
    flags: List[str] = field(default_factory=list)


def nodes_gradient(nodes, closed: bool, q: float, exclusion_width: int = DEFAULT_EXCLUSION,
                   diagonal: str = "fill") -> GradientResult:
    """Analytic gradient of :func:`tp_energy.nodes_energy` in the node coordinates.

    The tangent at node ``i`` is the normalized difference of its two
    neighbours, so every pair term also pulls on ``i +- 1``. The grid spacing
    is the polygon length over the cell count and is differentiated too.
    """
    nodes = np.asarray(nodes, dtype=float)
    m, dim = nodes.shape
    w = int(exclusion_width)
    q = float(q)
    _check_args(m, q, w, diagonal)
    cells = m if closed else m - 1
    edges = np.roll(nodes, -1, axis=0) - nodes if closed else nodes[1:] - nodes[:-1]
    edge_len = np.linalg.norm(edges, axis=1)
    h = float(edge_len.sum()) / cells
    nxt, prv = neighbor_indices(m, closed)
    chord = nodes[nxt] - nodes[prv]
    chord_len = np.linalg.norm(chord, axis=1)
    tangents = chord / chord_len[:, None]

    def work(block):
        rows = np.arange(block.start, block.stop)
        F, g, ex = _raw_block(nodes, tangents, rows, q, h, closed, w)
        W = pair_weight_block(rows, m, closed, w, diagonal, ex["coincident"])
        S = float(np.sum(W * F))
        capped_sum = float(np.sum(W[ex["capped"]] * F[ex["capped"]]))
        smooth = ex["live"] & ~ex["capped"] & (ex["p"] > 0)
        a = np.where(smooth, ex["a"], 1.0)
        p = np.where(smooth, ex["p"], 1.0)
        K = np.where(smooth, W * q * np.where(smooth, g, 1.0) ** (q - 1.0), 0.0)
        nhat = ex["perp"] / p[..., None]
        # d(1/r)/de = 2 nhat / a - 4 p e / a^2
        de = K[..., None] * (2.0 * nhat / a[..., None] - (4.0 * p / a**2)[..., None] * ex["e"])
        # d(1/r)/dc = -2 b nhat / (a |c|)
        dc = np.einsum("ij,ijk->ik", K * (-2.0 * ex["b"] / a), nhat) / chord_len[rows, None]
        col_force = de.sum(axis=0)
        row_force = de.sum(axis=1)
        return S, capped_sum, col_force, row_force, dc, rows

    grad = np.zeros_like(nodes)
    S_total = 0.0
    capped_total = 0.0
    flags = set()
    for S, capped_sum, col_force, row_force, dc, rows in _parallel.ordered_map(
            work, _parallel.row_blocks(m, m * dim, budget=600_000)):
        S_total += S
        capped_total += capped_sum
        grad += col_force
        grad[rows] -= row_force
        np.add.at(grad, nxt[rows], dc)
        np.add.at(grad, prv[rows], -dc)
        if capped_sum > 0:
            flags.add("near_contact")
    grad *= h**2
    # dE/dh, the capped entries h^-q carry their own h dependence
    dE_dh = 2.0 * h * S_total - q * h * capped_total
    unit = edges / edge_len[:, None]
    dL = np.zeros_like(nodes)
    if closed:
        dL += np.roll(unit, 1, axis=0) - unit
    else:
        dL[1:] += unit
        dL[:-1] -= unit
    grad += dE_dh * dL / cells
    return GradientResult(grad, h**2 * S_total, sorted(flags))


def discrete_gradient(c: ArcCurve, q: float, exclusion_width: int = DEFAULT_EXCLUSION,
                      diagonal: str = "fill") -> GradientResult:
    """Gradient of the discrete energy of ``c`` read as a node polygon."""
    return nodes_gradient(c.nodes, c.closed, q, exclusion_width, diagonal)


@dataclass
class FlowTrace:
    iterates: List[ArcCurve]
    iterate_steps: List[int]
    energies: List[float]
    step_sizes: List[float]
    length_residuals: List[float]
    terminated: str
    q: float
    reparametrizations: int = 0

    @property
    def final(self) -> ArcCurve:
        return self.iterates[-1]

    def summary(self):
        return {
            "q": self.q,
            "terminated": self.terminated,
            "accepted_steps": len(self.step_sizes),
            "initial_energy": self.energies[0],
            "final_energy": self.energies[-1],
            "max_length_residual": max(self.length_residuals) if self.length_residuals else 0.0,
            "reparametrizations": self.reparametrizations,
        }


def _restore_length(nodes, closed, length):
    center = nodes.mean(axis=0)
    return center + (nodes - center) * (length / polygon_length(nodes, closed))


def minimize(c: ArcCurve, q: float, max_iters: int = 2000, tol: float = 1e-8,
             exclusion_width: int = DEFAULT_EXCLUSION, diagonal: str = "fill",
             snapshot_every: int = 50, check_injective: bool = True) -> FlowTrace:
    """Projected gradient descent at fixed polygon length.

    Each step moves along the negative gradient, rescales about the centroid
    to the initial length and is accepted by an Armijo test on the actual
    displacement. Every ``REPARAM_EVERY`` accepted steps the nodes are
    respaced uniformly in arclength, kept only if that does not raise the
    energy.
    """
    from .knot_ops import injectivity_screen

    if not q > 2:
        raise ValidationError(f"q: the flow needs q > 2, got {q}")
    if check_injective:
        screen = injectivity_screen(c, 2 * c.h)
        if not screen.passed:
            raise ValidationError(f"curve fails the injectivity screen at nodes {screen.witness}")
    closed = c.closed
    X = np.array(c.nodes, dtype=float)
    L0 = polygon_length(X, closed)
    E = nodes_energy(X, closed, q, exclusion_width, diagonal)
    energies = [E]
    steps: List[float] = []
    residuals: List[float] = []
    iterates = [ArcCurve.from_nodes(X, closed)]
    iterate_steps = [0]
    reparams = 0
    terminated = "max_iters"
    alpha = None

    for it in range(1, int(max_iters) + 1):
        G = nodes_gradient(X, closed, q, exclusion_width, diagonal).gradient
        gmax = float(np.max(np.abs(G)))
        D = X - X.mean(axis=0)
        tangential = G - (np.sum(G * D) / np.sum(D * D)) * D
        if gmax == 0.0 or np.linalg.norm(tangential) <= 1e-10 * np.linalg.norm(G):
            terminated = "converged"
            break
        if alpha is None:
            alpha = 1e-2 * L0 / gmax
        while True:
            Y = _restore_length(X - alpha * G, closed, L0)
            E_new = nodes_energy(Y, closed, q, exclusion_width, diagonal)
            if E_new <= E + ARMIJO_C * float(np.sum(G * (Y - X))) and E_new <= E:
                break
            alpha *= BACKTRACK
            if alpha * gmax < 1e-14 * L0:
                break
        if alpha * gmax < 1e-14 * L0:
            terminated = "stalled"
            break
        X, E = Y, E_new
        steps.append(alpha)
        energies.append(E)
        residuals.append(abs(polygon_length(X, closed) - L0) / L0)
        alpha *= 1.5

        if len(steps) % REPARAM_EVERY == 0:
            try:
                R = resample_arclength(ArcCurve.from_nodes(X, closed), len(X)).nodes
                R = _restore_length(R, closed, L0)
                E_r = nodes_energy(R, closed, q, exclusion_width, diagonal)
                if E_r <= E:
                    X, E = R, E_r
                    energies[-1] = E
                    residuals[-1] = abs(polygon_length(X, closed) - L0) / L0
                    reparams += 1
            except NumericalError:
                logger.debug("reparametrization skipped at step %d", it)
        if snapshot_every and len(steps) % snapshot_every == 0:
            iterates.append(ArcCurve.from_nodes(X, closed))
            iterate_steps.append(len(steps))
        if len(energies) > STALL_WINDOW:
            past = energies[-1 - STALL_WINDOW]
            if (past - E) <= tol * abs(past):
                terminated = "converged"
                break

    if iterate_steps[-1] != len(steps) or len(iterates) == 1:
        iterates.append(ArcCurve.from_nodes(X, closed))
        iterate_steps.append(len(steps))
    logger.info("flow %s after %d accepted steps, energy %.6g -> %.6g",
                terminated, len(steps), energies[0], energies[-1])
    return FlowTrace(iterates, iterate_steps, energies, steps, residuals, terminated, float(q), reparams)


@dataclass
class PullTightResult:
    q: float
    m: int
    gaps: List[float]
    closest_approach: List[float]
    energies: List[float]
    slope: float
    verdict: str
    increment_ratio: float
    extrapolated_limit: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def pull_tight_curve(gap: float, m: int) -> ArcCurve:
    """Lifted figure eight whose two strands cross orthogonally ``gap`` apart."""
    return arc_curve(ShapeSpec("figure_eight", {"lift": gap / 2.0, "size": 1.0}), m)


def pull_tight_experiment(gaps: Sequence[float], q: float, m: int = None,
                          exclusion_width: int = DEFAULT_EXCLUSION,
                          cells_per_gap: float = 3.0) -> PullTightResult:
    """Energies of a family of knots pulled toward a transversal crossing.

    All members are evaluated with the same node count. The verdict is
    ``"blow_up"`` when the energies increase strictly and the last increment
    is at least as large as the one before (increments that shrink
    geometrically point to a finite limit, reported by Aitken
    extrapolation).
    """
    gaps = [float(g) for g in gaps]
    if len(gaps) < 3 or any(b >= a for a, b in zip(gaps, gaps[1:])) or gaps[-1] <= 0:
        raise ValidationError("gaps: need at least 3 positive, strictly decreasing values")
    if not q > 0:
        raise ValidationError(f"q: must be positive, got {q}")
    length = pull_tight_curve(gaps[0], 512).length
    if m is None:
        m = max(512, int(64 * math.ceil(cells_per_gap * length / gaps[-1] / 64)))
    h = length / m
    if gaps[-1] < 2 * h:
        raise ResolutionError(f"gap {gaps[-1]} is below the grid resolution 2h = {2 * h:.3g}")
    energies = []
    closest = []
    for g in gaps:
        c = pull_tight_curve(g, m)
        energies.append(energy(c, q, exclusion_width).value)
        closest.append(_strand_distance(c))
    slope = float(np.polyfit(np.log(gaps), np.log(energies), 1)[0])
    inc = np.diff(energies)
    ratio = float(inc[-1] / inc[-2]) if inc[-2] != 0 else math.inf
    increasing = bool(np.all(inc > 0))
    if increasing and ratio >= 1.0:
        verdict = "blow_up"
        limit = math.inf
    else:
        verdict = "bounded"
        limit = energies[-1] + (inc[-1] * ratio / (1.0 - ratio) if 0 <= ratio < 1 else 0.0)
    return PullTightResult(float(q), int(m), gaps, closest, energies, slope, verdict, ratio, float(limit))


def _strand_distance(c: ArcCurve) -> float:
    # nodes near the crossing on the two strands: parameters near 0 and L/2
    k = max(4, c.m // 32)
    a = c.nodes[np.r_[c.m - k:c.m, 0:k]]
    b = c.nodes[c.m // 2 - k:c.m // 2 + k]
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(d.min())
