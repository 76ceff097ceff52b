from __future__ import annotations

import numpy as np
import pytest

from conftest import tangents_of
from cyltri.errors import EliminationSingular, InvalidInput
from cyltri.geometry import Circle2D, dual_conic_from_circle, manifold_residuals
from cyltri.oracle import numerical_gradient
from cyltri.solvers import (
    build_stationary_system,
    constrained_lsq_stationary,
    lsq_cost,
    solve_constrained_lsq,
)
from cyltri.synthetic import add_line_noise

TRUTH = Circle2D(1.0, 2.0, 1.5)


def _noisy(rng, n, sigma, truth=TRUTH):
    L = tangents_of(truth, rng.uniform(0, 2 * np.pi, n))
    return np.array([add_line_noise(l, sigma, rng) for l in L])


def test_six_exact_tangents():
    L = tangents_of(TRUTH, np.linspace(0, 2 * np.pi, 6, endpoint=False) + 0.1)
    best, circles = solve_constrained_lsq(L)
    assert np.abs(best.as_array() - TRUTH.as_array()).max() < 1e-8
    assert 1 <= len(circles) <= 9


def test_parallel_lines_are_singular():
    L = np.array([[1.0, 0, c] for c in (-1, 0, 1, 2)])
    with pytest.raises(EliminationSingular):
        build_stationary_system(L)
    with pytest.raises(EliminationSingular):
        solve_constrained_lsq(L)


def test_too_few_lines():
    with pytest.raises(InvalidInput):
        solve_constrained_lsq(tangents_of(TRUTH, [0, 1, 2]))


def test_exact_tangents_are_a_root(rng):
    for _ in range(20):
        truth = Circle2D(*rng.uniform(-3, 3, 2), rng.uniform(0.3, 2))
        L = tangents_of(truth, rng.uniform(0, 2 * np.pi, 4))
        sys_ = build_stationary_system(L)
        d = dual_conic_from_circle(truth).d
        assert np.abs(sys_.equations(d[2], d[3], d[4])).max() < 1e-9 * max(1, np.abs(d).max()) ** 3


def test_polynomial_degrees():
    sys_ = build_stationary_system(tangents_of(TRUTH, [0.1, 1.3, 2.9, 4.4, 5.2]))

    def degree(p):
        idx = np.argwhere(np.abs(p) > 1e-12)
        return int(idx.sum(axis=1).max())

    assert (degree(sys_.g3), degree(sys_.g4), degree(sys_.g5)) == (3, 2, 3)


def test_back_substitution_matches_lagrangian_gradient(rng):
    """Back-substituted roots zero all seven gradient equations of L."""
    for _ in range(20):
        L = _noisy(rng, int(rng.integers(4, 11)), 0.05)
        sys_ = build_stationary_system(L)
        for p in constrained_lsq_stationary(L):
            d1, d2, l1, l2 = sys_.back_substitute(p.d[2], p.d[3], p.d[4])
            assert np.allclose([d1, d2, l1, l2], [p.d[0], p.d[1], p.lam1, p.lam2], rtol=1e-8, atol=1e-8)
            g = sys_.gradient(p.x)
            scale = max(1.0, np.abs(p.x).max()) ** 3 * np.abs(sys_.M).max()
            assert np.abs(g).max() < 1e-8 * scale
            # and the analytic gradient agrees with central differences
            fd = numerical_gradient(sys_.lagrangian, p.x, 1e-6)
            assert np.abs(fd - g).max() < 1e-5 * scale


def test_stationary_points_bounded_and_feasible(rng):
    for _ in range(50):
        L = _noisy(rng, int(rng.integers(4, 11)), 0.02)
        points = constrained_lsq_stationary(L)
        assert len(points) <= 9
        costs = [p.cost for p in points]
        assert costs == sorted(costs)
        for p in points:
            c1, c2 = manifold_residuals(p.d)
            assert abs(c1) < 1e-10 and abs(c2) < 1e-10
            if p.circle is not None:
                assert p.cost == pytest.approx(lsq_cost(L, p.circle), rel=1e-6, abs=1e-12)


def test_noisy_ten_lines_error():
    rng = np.random.default_rng(42)
    for _ in range(20):
        L = _noisy(rng, 10, 0.01)
        best, _ = solve_constrained_lsq(L)
        err = np.hypot(best.tx - TRUTH.tx, best.ty - TRUTH.ty) + abs(best.r - TRUTH.r)
        assert err < 0.2


def test_similarity_equivariance(rng):
    L = _noisy(rng, 7, 0.02)
    best, _ = solve_constrained_lsq(L)
    s, t = 3.7, np.array([-12.0, 5.5])
    L2 = np.column_stack([L[:, :2], s * L[:, 2] - L[:, :2] @ t])
    moved, _ = solve_constrained_lsq(L2)
    expect = np.array([s * best.tx + t[0], s * best.ty + t[1], s * best.r])
    assert np.abs(moved.as_array() - expect).max() < 1e-8 * 20
