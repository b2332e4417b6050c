import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpcurve.errors import ResolutionError, ValidationError
from tpcurve.regularity import hoelder_fit, tangent_at, tangent_oscillation, verify_main_estimate

from conftest import fourier_curve, shape


def test_oscillation_examples():
    seg = shape("segment", 64)
    assert tangent_oscillation(seg, 0.1, 0.8) == 0.0
    c = shape("circle", 512)
    assert tangent_oscillation(c, 1.0, 1.0) == 0.0
    for theta in (0.1, 0.7, 2.0, math.pi):
        assert tangent_oscillation(c, 0.3, 0.3 + theta) == pytest.approx(2 * math.sin(theta / 2), abs=1e-3)


def test_tangent_at_unit():
    c = fourier_curve(2, m=128)
    for u in np.linspace(0, c.length, 37):
        assert np.linalg.norm(tangent_at(c, u)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(u=st.floats(0, 1), v=st.floats(0, 1), w=st.floats(0, 1))
def test_oscillation_symmetric_and_triangle(u, v, w):
    c = fourier_curve(5, m=128)
    L = c.length
    u, v, w = u * L, v * L, w * L
    assert tangent_oscillation(c, u, v) == tangent_oscillation(c, v, u)
    assert tangent_oscillation(c, u, w) <= tangent_oscillation(c, u, v) + tangent_oscillation(c, v, w) + 1e-12


@pytest.mark.parametrize("a", [1.3, 1.5, 1.7, 1.9])
def test_hoelder_power_graph(a):
    fit = hoelder_fit(shape("power_graph", 100_000, a=a), gap_range=(1e-3, 1e-1))
    assert fit.exponent == pytest.approx(a - 1, abs=0.1)
    assert 0 < fit.exponent <= 1.5


def test_hoelder_monotone_in_a():
    exps = [hoelder_fit(shape("power_graph", 100_000, a=a), gap_range=(1e-3, 1e-1)).exponent
            for a in (1.3, 1.5, 1.7, 1.9)]
    assert all(b > a for a, b in zip(exps, exps[1:]))


def test_hoelder_circle():
    fit = hoelder_fit(shape("circle", 1024))
    assert fit.exponent == pytest.approx(1.0, abs=0.1)
    lo, hi = fit.gap_range
    assert 0 < lo < hi <= shape("circle", 1024).length / 2


def test_hoelder_flat():
    fit = hoelder_fit(shape("segment", 400))
    assert fit.exponent == 1.0 and "flat" in fit.flags


def test_hoelder_validation():
    c = shape("circle", 128)
    with pytest.raises(ValidationError):
        hoelder_fit(c, pair_count=50)
    with pytest.raises(ResolutionError):
        hoelder_fit(c, gap_range=(c.h, 1.0))


def test_main_estimate_circle_stable_and_dilation_invariant():
    r256 = verify_main_estimate(shape("circle", 256), 3).max_ratio
    r512 = verify_main_estimate(shape("circle", 512), 3).max_ratio
    assert r512 == pytest.approx(r256, rel=0.1)
    big = verify_main_estimate(shape("circle", 512).scaled(3.0), 3).max_ratio
    assert big == pytest.approx(r512, rel=1e-6)


def test_main_estimate_segment_zero():
    rep = verify_main_estimate(shape("segment", 256), 3)
    assert rep.max_ratio == 0.0


def test_main_estimate_report_fields():
    rep = verify_main_estimate(shape("ellipse", 256), 4, pair_count=100)
    d = rep.to_dict()
    assert d["lambda"] == pytest.approx(0.5)
    assert d["cutoff"] <= shape("ellipse", 256).length / 8 + 1e-12
    assert len(d["argmax_pair"]) == 2


def test_main_estimate_seed_determines_pairs():
    c = fourier_curve(1, m=256)
    a = verify_main_estimate(c, 3, seed=4)
    b = verify_main_estimate(c, 3, seed=4)
    assert a.max_ratio == b.max_ratio and a.argmax_pair == b.argmax_pair


def test_main_estimate_near_extremal_power_graph_finite():
    q = 3.0
    a = 2 - 2 / q + 0.01
    c = shape("power_graph", 4096, a=a, x_min=-1.0)
    rep = verify_main_estimate(c, q, anchor=c.length / 2)
    assert math.isfinite(rep.max_ratio) and rep.max_ratio > 0


def test_main_estimate_critical_exponent_is_measurement_only():
    rep = verify_main_estimate(shape("circle", 128), 2.0)
    assert "critical_exponent" in rep.flags and rep.lam == 0.0
    with pytest.raises(ValidationError):
        verify_main_estimate(shape("circle", 128), 1.5)
