from __future__ import annotations

import numpy as np
import pytest

from conftest import tangents_of
from cyltri.errors import NotACircle, RankDeficient
from cyltri.geometry import Circle2D, DualConic2D, circle_from_dual_conic, manifold_residuals
from cyltri.solvers import circle_from_linear_conic, classify_conic, solve_linear_conic


def test_full_circle_tangents_are_on_manifold():
    truth = Circle2D(0.5, -1.0, 2.0)
    L = tangents_of(truth, np.linspace(0, 2 * np.pi, 6, endpoint=False))
    d = solve_linear_conic(L)
    c1, c2 = manifold_residuals(d)
    assert abs(c1) < 1e-8 and abs(c2) < 1e-8
    back = circle_from_dual_conic(d)
    assert np.abs(back.as_array() - truth.as_array()).max() < 1e-8
    assert classify_conic(d) == "circle"
    c, cls = circle_from_linear_conic(d)
    assert cls == "circle" and np.abs(c.as_array() - truth.as_array()).max() < 1e-8


def test_four_lines_rank_deficient():
    L = tangents_of(Circle2D(0, 0, 1), [0.0, 1.0, 2.0, 3.0])
    with pytest.raises(RankDeficient):
        solve_linear_conic(L)
    # the benchmark baseline still answers
    assert solve_linear_conic(L, allow_underdetermined=True).d.shape == (6,)


@pytest.mark.parametrize(
    "d, expected",
    [
        ([1, 0, 0, 1, 0, -1], "circle"),
        ([1, 0, 0, -1, 0, -1], "hyperbola"),
        ([4, 0, 0, 1, 0, -1], "ellipse"),
        ([1, 0, 0, 0, 0, 0], "degenerate"),
        ([1, 0, 1, 1, 0, 1], "degenerate"),  # det 0
        ([-1, 0, 0, -1, 0, -1], "degenerate"),  # no real points
        ([1, 0, 0, 0, 0.5, 0], "parabola"),  # point conic y = x^2
    ],
)
def test_classify(d, expected):
    assert classify_conic(DualConic2D(d)) == expected


def test_classify_is_scale_free():
    for s in (1e-5, -2.0, 1e5):
        assert classify_conic(np.array([1.0, 0, 0, -1, 0, -1]) * s) == "hyperbola"
        assert classify_conic(np.array([1.0, 0, 0, 1, 0, -1]) * s) == "circle"


def test_hyperbola_is_not_a_circle():
    with pytest.raises(NotACircle) as exc:
        circle_from_linear_conic(DualConic2D([1, 0, 0, -1, 0, -1]))
    assert exc.value.conic_class == "hyperbola"
