import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpcurve import _parallel
from tpcurve.curve_model import ArcCurve, Polyline, ShapeSpec, arc_curve, generate, resample_arclength
from tpcurve.errors import ResolutionError, ValidationError
from tpcurve.tp_energy import (energy, filled_integrand, local_energy, refine_energy, scale_invariant_energy,
                               tangent_point_radius)

from conftest import fourier_curve, shape

TWO_PI = 2 * math.pi

unit = st.floats(-1, 1, allow_nan=False)
vec = st.tuples(unit, unit, unit).map(np.array)


def test_radius_examples():
    assert tangent_point_radius([0, 0, 0], [1, 0, 0], [0, 1, 0]) == 0.5
    assert tangent_point_radius([0, 0, 0], [1, 0, 0], [2, 0, 0]) == math.inf
    assert tangent_point_radius([1, 2, 3], [1, 0, 0], [1, 2, 3]) == 0.0


def test_radius_on_circle():
    for a, b in ((0.0, 1.0), (0.3, 2.9), (1.0, 4.0)):
        base = np.array([math.cos(a), math.sin(a), 0.0])
        tan = np.array([-math.sin(a), math.cos(a), 0.0])
        target = np.array([math.cos(b), math.sin(b), 0.0])
        assert tangent_point_radius(base, tan, target) == pytest.approx(1.0, abs=1e-9)


def test_radius_rejects_non_unit_tangent():
    with pytest.raises(ValidationError):
        tangent_point_radius([0, 0, 0], [2, 0, 0], [0, 1, 0])


@settings(max_examples=100, deadline=None)
@given(base=vec, target=vec, t=vec)
def test_radius_line_not_ray(base, target, t):
    if np.linalg.norm(t) < 1e-3:
        return
    t = t / np.linalg.norm(t)
    assert tangent_point_radius(base, t, target) == tangent_point_radius(base, -t, target)


@settings(max_examples=100, deadline=None)
@given(base=vec, target=vec, t=vec, s=st.floats(0.01, 100))
def test_radius_scales_linearly(base, target, t, s):
    if np.linalg.norm(t) < 1e-3:
        return
    t = t / np.linalg.norm(t)
    r = tangent_point_radius(base, t, target)
    rs = tangent_point_radius(s * base, t, s * target)
    if math.isinf(r):
        assert math.isinf(rs) or rs > 1e9
    else:
        assert rs == pytest.approx(s * r, rel=1e-9, abs=1e-300)


def test_circle_energy_closed_form():
    rep = energy(shape("circle", 512), 2)
    assert rep.value == pytest.approx(TWO_PI**2, rel=1e-2)
    assert rep.m == 512 and rep.exclusion_width == 2 and rep.q == 2
    assert rep.max_integrand * shape("circle", 512).h ** 2 <= rep.value


@pytest.mark.parametrize("q", [1.5, 2, 3, 4, 8])
def test_unit_circle_energy_independent_of_q(q):
    assert energy(shape("circle", 256), q).value == pytest.approx(TWO_PI**2, rel=1e-2)


def test_k_cover_ratio():
    base = energy(shape("circle", 512), 3).value
    two = energy(shape("k_circle", 1024, k=2), 3).value
    assert two / base == pytest.approx(4.0, rel=1e-2)


def test_dilation_law():
    c = shape("ellipse", 256)
    for s, q in ((2.0, 3.0), (0.3, 2.5), (7.0, 4.0)):
        big = ArcCurve(c.nodes * s, c.tangents, c.length * s, True)
        assert energy(big, q).value == pytest.approx(s ** (2 - q) * energy(c, q).value, rel=1e-9)


def test_circle_scaled_by_two():
    small = energy(shape("circle", 256), 3).value
    big = energy(shape("circle", 256, radius=2.0), 3).value
    assert big / small == pytest.approx(0.5, rel=1e-2)


def test_segment_energy_zero():
    c = shape("segment", 64)
    assert energy(c, 3).value == 0.0


def test_exclude_mode_is_lower_and_close():
    c = shape("circle", 512)
    filled = energy(c, 2).value
    excluded = energy(c, 2, diagonal="exclude").value
    assert excluded < filled
    assert excluded == pytest.approx(filled, rel=0.02)


def test_argument_validation():
    c = shape("circle", 64)
    with pytest.raises(ValidationError):
        energy(c, 0)
    with pytest.raises(ValidationError):
        energy(c, 2, exclusion_width=0)
    with pytest.raises(ValidationError):
        energy(c, 2, diagonal="band")
    with pytest.raises(ResolutionError):
        energy(shape("circle", 12), 2)


def test_self_contact_is_capped_and_flagged():
    c = shape("k_circle", 256, k=2)
    rep = energy(c, 3)
    assert math.isfinite(rep.value)
    assert "coincident_nodes" in rep.flags or "near_contact" in rep.flags


def test_thread_count_does_not_change_results():
    c = fourier_curve(3, m=700)
    old = _parallel.get_threads()
    try:
        _parallel.set_threads(1)
        one = energy(c, 3).value
        _parallel.set_threads(4)
        four = energy(c, 3).value
    finally:
        _parallel.set_threads(old)
    assert one == four


@pytest.mark.parametrize("kind", ["ellipse", "torus_knot", "perturbed_circle"])
def test_swapping_tangent_point_keeps_window_energy(kind):
    # tangent taken at the other point of each pair, on square windows [u, v]^2
    c = shape(kind, 512)
    G, _ = filled_integrand(c, 3)
    for i0, i1 in ((0, 512), (10, 90), (200, 460)):
        idx = np.arange(i0, i1)
        a = G[np.ix_(idx, idx)].sum()
        b = G.T[np.ix_(idx, idx)].sum()
        assert abs(a / b - 1) < 5e-3


def test_refine_examples():
    square = generate(ShapeSpec("regular_polygon", {"vertices": 4}))
    r = refine_energy(square, 2, [64, 128, 256, 512])
    assert r.verdict == "diverging"
    assert all(b > a for a, b in zip(r.values, r.values[1:]))
    assert r.last_ratio > 1.1
    assert refine_energy(square, 1.5, [64, 128, 256, 512]).verdict == "converged"
    circ = refine_energy(ShapeSpec("circle", {"samples": 1024}), 3, [128, 256, 512])
    assert circ.verdict == "converged"
    L = circ.reports[-1].length
    assert circ.values[-1] == pytest.approx(L**2, rel=1e-2)


def test_refine_validates_levels():
    with pytest.raises(ValidationError):
        refine_energy(ShapeSpec("circle", {}), 2, [64, 128])
    with pytest.raises(ValidationError):
        refine_energy(ShapeSpec("circle", {}), 2, [64, 64, 128])


def test_local_energy_full_period_matches():
    c = shape("torus_knot", 256)
    assert local_energy(c, 0.0, c.length, 3) == pytest.approx(energy(c, 3).value, rel=1e-12)


def test_local_energy_quarter_arc():
    c = shape("circle", 512)
    assert local_energy(c, 0.0, c.length / 4, 2) == pytest.approx(math.pi**2 / 4, rel=2e-2)


def test_local_energy_straight_subarc():
    c = shape("segment", 101, length=10.0)
    assert local_energy(c, 2.0, 5.0, 3) == 0.0


def test_local_energy_below_resolution():
    c = shape("circle", 64)
    with pytest.raises(ResolutionError):
        local_energy(c, 0.0, 2 * c.h, 3)


def test_scale_invariant_energy():
    c = shape("circle", 512)
    assert scale_invariant_energy(c, 3) == pytest.approx(TWO_PI**3, rel=1e-2)
    big = shape("circle", 512, radius=5.0)
    assert scale_invariant_energy(big, 3) == pytest.approx(scale_invariant_energy(c, 3), rel=1e-2)
    assert scale_invariant_energy(c, 2) == energy(c, 2).value


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), q=st.floats(2.0, 6.0))
def test_energy_nonnegative_and_report_bound(seed, q):
    c = fourier_curve(seed, m=96)
    rep = energy(c, q)
    assert rep.value >= 0
    assert rep.max_integrand * c.h**2 <= rep.value * (1 + 1e-12)
