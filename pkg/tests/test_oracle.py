from __future__ import annotations

import numpy as np
import pytest

from conftest import tangents_of
from cyltri.geometry import Circle2D
from cyltri.oracle import numerical_gradient, oracle_cost, oracle_gradient, oracle_lsq
from cyltri.solvers import lsq_cost
from cyltri.synthetic import add_line_noise

TRUTH = Circle2D(1.0, 2.0, 1.5)


def test_exact_tangents():
    L = tangents_of(TRUTH, np.linspace(0, 2 * np.pi, 6, endpoint=False) + 0.3)
    c, cost = oracle_lsq(L, return_cost=True)
    assert np.abs(c.as_array() - TRUTH.as_array()).max() < 1e-6
    assert cost < 1e-20


def test_cost_matches_solver_cost(rng):
    L = tangents_of(TRUTH, rng.uniform(0, 6, 5)) + [0, 0, 0.1]
    p = np.array([0.3, -0.2, 2.0])
    assert oracle_cost(L, p) == pytest.approx(lsq_cost(L, Circle2D(*p)), rel=1e-13)


def test_gradient_against_finite_differences(rng):
    for _ in range(10):
        L = rng.normal(size=(6, 3))
        p = rng.normal(size=3)
        fd = numerical_gradient(lambda x: oracle_cost(L, x), p)
        g = oracle_gradient(L, p)
        assert np.abs(fd - g).max() < 1e-6 * max(1, np.abs(g).max())


def _instance(rng, n, sigma):
    L = tangents_of(TRUTH, rng.uniform(0, 2 * np.pi, n))
    return np.array([add_line_noise(l, sigma, rng) for l in L])


def test_saturation():
    rng = np.random.default_rng(1)
    for _ in range(5):
        L = _instance(rng, 6, 0.02)
        _, a = oracle_lsq(L, starts=100, rng=0, return_cost=True)
        _, b = oracle_lsq(L, starts=1000, rng=1, return_cost=True)
        assert abs(a - b) < 1e-10


def test_vanishing_gradient_at_optimum():
    rng = np.random.default_rng(2)
    for _ in range(5):
        L = _instance(rng, 6, 0.02)
        c = oracle_lsq(L)
        g = numerical_gradient(lambda x: oracle_cost(L, x), c.as_array())
        assert np.linalg.norm(g) < 1e-6


def test_needs_four_lines():
    with pytest.raises(ValueError):
        oracle_lsq(tangents_of(TRUTH, [0, 1, 2]))
