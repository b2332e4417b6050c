import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpcurve.curve_model import (ArcCurve, Polyline, ShapeSpec, arc_curve, estimate_tangents, generate,
                                 resample_arclength, tangent_estimate)
from tpcurve.errors import ResolutionError, TangentError, ValidationError

from conftest import shape


def test_circle_polygon_length():
    p = generate(ShapeSpec("circle", {"radius": 1.0, "samples": 256}))
    assert p.closed
    assert len(p.points) == 256
    assert p.length == pytest.approx(2 * math.pi, rel=1e-3)


def test_k_circle_traverses_k_times():
    p = generate(ShapeSpec("k_circle", {"k": 3, "radius": 1.0}))
    assert p.closed
    assert p.length == pytest.approx(6 * math.pi, rel=1e-3)
    angles = np.unwrap(np.arctan2(p.points[:, 1], p.points[:, 0]))
    assert angles[-1] - angles[0] == pytest.approx(6 * math.pi, rel=1e-2)


def test_power_graph_endpoints():
    p = generate(ShapeSpec("power_graph", {"a": 1.5, "samples": 512}))
    assert not p.closed
    assert len(p.points) == 512
    np.testing.assert_allclose(p.points[0], [0, 0, 0], atol=0)
    np.testing.assert_allclose(p.points[-1], [1, 1, 0], atol=1e-15)


@pytest.mark.parametrize("kind,params,name", [
    ("power_graph", {"a": 2.5}, "a"),
    ("power_graph", {"a": 1.0}, "a"),
    ("torus_knot", {"p": 2, "q": 4}, "q"),
    ("circle", {"radius": -1.0}, "radius"),
    ("k_circle", {"k": 0}, "k"),
    ("regular_polygon", {"vertices": 2}, "vertices"),
])
def test_generate_rejects_bad_parameters(kind, params, name):
    with pytest.raises(ValidationError, match=name):
        generate(ShapeSpec(kind, params))


def test_unknown_kind():
    with pytest.raises(ValidationError, match="kind"):
        generate(ShapeSpec("spiral", {}))


@pytest.mark.parametrize("kind", ["circle", "k_circle", "regular_polygon", "torus_knot", "stadium",
                                  "power_graph", "perturbed_circle", "ellipse", "figure_eight", "segment"])
def test_every_kind_resamples(kind):
    c = arc_curve(ShapeSpec(kind, {}), 64)
    gaps = np.linalg.norm(np.diff(c.nodes, axis=0), axis=1)
    assert np.all(gaps > 0)
    np.testing.assert_allclose(np.linalg.norm(c.tangents, axis=1), 1.0, atol=1e-9)


def test_polyline_invariants():
    with pytest.raises(ValidationError):
        Polyline(np.zeros((2, 3)), True)
    with pytest.raises(ValidationError):
        Polyline([[0, 0, 0]], False)
    with pytest.raises(ValidationError):
        Polyline([[0, 0, 0], [0, 0, 0], [1, 0, 0]], False)
    with pytest.raises(ValidationError):
        Polyline([[0, 0, 0, 0], [1, 0, 0, 0]], False)


def test_resample_circle_length_and_gaps():
    p = generate(ShapeSpec("circle", {"samples": 256}))
    c = resample_arclength(p, 128)
    assert c.length == pytest.approx(2 * math.pi, rel=1e-3)
    assert c.length == pytest.approx(p.length, rel=1e-15)
    gaps = np.linalg.norm(np.roll(c.nodes, -1, axis=0) - c.nodes, axis=1)
    # every other vertex of the 256-gon
    assert np.ptp(gaps) <= 1e-6 * c.length
    assert abs(gaps.sum() - c.length) <= 1e-3 * c.length
    np.testing.assert_allclose(np.linalg.norm(c.nodes, axis=1), 1.0, rtol=1e-6)


def test_resample_segment_spacing():
    c = resample_arclength(Polyline([[0, 0, 0], [1, 0, 0]], False), 11)
    np.testing.assert_allclose(c.nodes[:, 0], np.linspace(0, 1, 11), atol=1e-15)
    assert c.h == pytest.approx(0.1)


def test_resample_minimum_nodes():
    with pytest.raises(ResolutionError):
        resample_arclength(generate(ShapeSpec("circle", {})), 4)


def test_degenerate_polyline_rejected():
    with pytest.raises(ValidationError):
        resample_arclength(Polyline([[0, 0, 0], [0, 0, 0]], False), 16)


def test_circle_tangent_perpendicular_to_radius():
    c = shape("circle", 512)
    for i in (0, 17, 300):
        t = tangent_estimate(c, i)
        assert abs(t @ c.nodes[i]) < 1e-3
        assert np.linalg.norm(t) == pytest.approx(1.0, abs=1e-12)


def test_segment_tangent_exact():
    c = resample_arclength(Polyline([[0, 0, 0], [3, 4, 0]], False), 16)
    for i in range(16):
        np.testing.assert_allclose(tangent_estimate(c, i), [0.6, 0.8, 0.0], rtol=0, atol=1e-15)


def test_square_corner_bisector():
    sq = generate(ShapeSpec("regular_polygon", {"vertices": 4}))
    c = resample_arclength(sq, 64)
    # nodes 0, 16, 32, 48 are the corners
    for corner in (0, 16, 32, 48):
        np.testing.assert_allclose(c.nodes[corner], sq.points[corner // 16], atol=1e-15)
        e_in = c.nodes[corner] - c.nodes[corner - 1]
        e_out = c.nodes[(corner + 1) % 64] - c.nodes[corner]
        bis = e_in / np.linalg.norm(e_in) + e_out / np.linalg.norm(e_out)
        np.testing.assert_allclose(tangent_estimate(c, corner), bis / np.linalg.norm(bis), atol=1e-12)


def test_open_endpoint_one_sided():
    c = shape("power_graph", 64, a=1.5)
    d = c.nodes[1] - c.nodes[0]
    np.testing.assert_allclose(c.tangents[0], d / np.linalg.norm(d), atol=1e-15)


def test_tangent_error_on_doubling_back():
    nodes = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 0], [0, 1, 0]], dtype=float)
    with pytest.raises(TangentError):
        estimate_tangents(nodes, False)


@pytest.mark.parametrize("kind", ["torus_knot", "ellipse", "stadium", "power_graph", "figure_eight"])
def test_arc_curve_invariants(kind):
    c = shape(kind, 256)
    np.testing.assert_allclose(np.linalg.norm(c.tangents, axis=1), 1.0, atol=1e-9)
    nxt = np.roll(c.nodes, -1, axis=0) if c.closed else c.nodes[1:]
    gaps = np.linalg.norm(nxt - c.nodes[:len(nxt)], axis=1)
    assert np.all(np.abs(gaps - c.h) <= 1e-6 * c.length)
    assert abs(gaps.sum() - c.length) <= 1e-6 * c.length
    with pytest.raises(ValidationError):
        ArcCurve(c.nodes, c.tangents * 2, c.length, True)


@settings(max_examples=20, deadline=None)
@given(kind=st.sampled_from(["circle", "k_circle", "ellipse", "torus_knot", "perturbed_circle", "stadium",
                             "power_graph", "figure_eight"]),
       m=st.integers(8, 800))
def test_resample_idempotent(kind, m):
    c = arc_curve(ShapeSpec(kind, {}), m)
    again = resample_arclength(c, m)
    assert np.max(np.linalg.norm(again.nodes - c.nodes, axis=1)) <= 1e-6 * c.length


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.01, 100.0), m=st.integers(16, 600), samples=st.integers(8, 600))
def test_circle_nodes_between_polygon_and_circle(r, m, samples):
    c = resample_arclength(generate(ShapeSpec("circle", {"radius": r, "samples": samples})), m)
    rad = np.linalg.norm(c.nodes, axis=1)
    assert np.all(rad <= r * (1 + 1e-12))
    assert np.all(rad >= r * math.cos(math.pi / samples) * (1 - 1e-12))
    assert c.length == pytest.approx(samples * 2 * r * math.sin(math.pi / samples), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.01, 100.0), m=st.integers(8, 600), cover=st.integers(1, 3))
def test_circle_nodes_at_radius(r, m, cover):
    c = resample_arclength(generate(ShapeSpec("circle", {"radius": r, "samples": m * cover})), m)
    np.testing.assert_allclose(np.linalg.norm(c.nodes, axis=1), r, rtol=1e-6)
