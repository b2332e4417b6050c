import functools

import numpy as np
import pytest

from tpcurve.curve_model import Polyline, ShapeSpec, arc_curve, resample_arclength


@functools.lru_cache(maxsize=None)
def shape(kind, m, **params):
    return arc_curve(ShapeSpec(kind, dict(params)), m)


def fourier_curve(seed, m=256, n=4096):
    """Smooth closed space curve without symmetries: a circle plus random low modes."""
    rng = np.random.default_rng(seed)
    t = 2 * np.pi * np.arange(n) / n
    P = np.column_stack([np.cos(t), np.sin(t), 0.1 * np.sin(2 * t)])
    for k in (2, 3):
        a = rng.normal(size=3) * 0.08
        b = rng.normal(size=3) * 0.08
        P += a[None, :] * np.cos(k * t)[:, None] + b[None, :] * np.sin(k * t)[:, None]
    return resample_arclength(Polyline(P, True), m)


@pytest.fixture
def circle512():
    return shape("circle", 512)
