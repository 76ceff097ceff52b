from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import tangents_of
from cyltri.errors import DegenerateLines, InvalidInput
from cyltri.geometry import Circle2D, geometric_line_residual, manifold_residuals, tangency_rows
from cyltri.polysys import solve_quadratic_pair
from cyltri.solvers import manifold_quadratics, nullspace_parametrization, solve_minimal_three_lines

UNIT_TANGENTS = np.array([[1.0, 0, -1], [1.0, 0, 1], [0, 1.0, -1]])


def _sorted(circles):
    return sorted(c.as_array().round(12).tolist() for c in circles)


def _contains(circles, truth, tol):
    return any(np.abs(c.as_array() - truth.as_array()).max() < tol for c in circles)


def test_nullspace_contains_unit_circle():
    basis = nullspace_parametrization(UNIT_TANGENTS)
    A = np.stack([basis.d_alpha, basis.d_beta, basis.d_gamma])
    d = np.array([1.0, 0, 0, 1, 0, -1])
    # distance of the ray through d to the span of the three basis vectors
    coef, *_ = np.linalg.lstsq(A.T, d, rcond=None)
    assert np.linalg.norm(A.T @ coef - d) < 1e-12
    assert np.abs(tangency_rows(UNIT_TANGENTS) @ A.T).max() < 1e-12


def test_nullspace_random_lines(rng):
    for _ in range(50):
        L = rng.normal(size=(3, 3))
        L /= np.hypot(L[:, 0], L[:, 1])[:, None]
        b = nullspace_parametrization(L)
        A = np.stack([b.d_alpha, b.d_beta, b.d_gamma])
        assert np.abs(tangency_rows(L) @ A.T).max() < 1e-12


def test_repeated_line_is_degenerate():
    with pytest.raises(DegenerateLines):
        nullspace_parametrization([1, 0, -1], [1, 0, -1], [0, 1, 0])
    with pytest.raises(DegenerateLines):
        solve_minimal_three_lines([1, 0, -1], [1, 0, -1], [0, 1, 0])


def test_wrong_count():
    with pytest.raises(InvalidInput):
        solve_minimal_three_lines(UNIT_TANGENTS[:2])


def test_two_parallel_tangents():
    assert _sorted(solve_minimal_three_lines(UNIT_TANGENTS)) == [[0.0, 0.0, 1.0], [0.0, 2.0, 1.0]]


def test_right_isosceles_triangle():
    s = np.sqrt(0.5)
    circles = solve_minimal_three_lines([1, 0, 0], [0, 1, 0], [s, s, -2 * s])
    assert len(circles) == 4  # incircle and three excircles
    for c in circles:
        for line in ([1, 0, 0], [0, 1, 0], [s, s, -2 * s]):
            assert abs(geometric_line_residual(line, c)) < 1e-10
    k = 2 - np.sqrt(2)
    assert _contains(circles, Circle2D(k, k, k), 1e-12)


def test_solutions_come_from_quadratic_pair():
    basis = nullspace_parametrization(UNIT_TANGENTS)
    roots = solve_quadratic_pair(manifold_quadratics(basis))
    for a, b in roots:
        c1, c2 = manifold_residuals(basis.conic(a, b))
        assert abs(c1) < 1e-10 and abs(c2) < 1e-10


def test_completeness_random(rng):
    for _ in range(2000):
        truth = Circle2D(*rng.uniform(-5, 5, 2), rng.uniform(0.1, 3))
        L = tangents_of(truth, rng.uniform(0, 2 * np.pi, 3))
        circles = solve_minimal_three_lines(L)
        assert len(circles) <= 4
        assert _contains(circles, truth, 1e-8)
        for c in circles:
            assert np.abs([geometric_line_residual(l, c) for l in L]).max() < 1e-8


@given(
    st.floats(-10, 10), st.floats(-10, 10), st.floats(0.05, 20), st.integers(0, 2**31),
)
def test_similarity_equivariance(dx, dy, scale, seed):
    rng = np.random.default_rng(seed)
    truth = Circle2D(*rng.uniform(-2, 2, 2), rng.uniform(0.3, 2))
    L = tangents_of(truth, rng.uniform(0, 2 * np.pi, 3))
    # x -> scale * x + t maps n.x + c = 0 to n.x' + (scale c - n.t) = 0
    t = np.array([dx, dy])
    L2 = np.column_stack([L[:, :2], scale * L[:, 2] - L[:, :2] @ t])
    a = sorted(
        (np.array([scale * c.tx + dx, scale * c.ty + dy, scale * c.r]) for c in solve_minimal_three_lines(L)),
        key=tuple,
    )
    b = sorted((c.as_array() for c in solve_minimal_three_lines(L2)), key=tuple)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert np.abs(x - y).max() < 1e-8 * max(1.0, scale, abs(dx), abs(dy))
