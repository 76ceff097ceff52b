from __future__ import annotations

import itertools

import numpy as np
import pytest

from cyltri.errors import NonFiniteSolutionSet
from cyltri.polysys import QuadraticPair, solve_cubic_pair, eval2, solve_quadratic_pair

S = np.sqrt(0.5)


def _grid_newton(qp: QuadraticPair, box=4.0, n=41):
    """Independent root finder: Newton from every node of a dense grid."""
    q1, q2 = qp.q1, qp.q2

    def jac(a, b):
        return np.array(
            [[2 * q1[0] * a + q1[1] * b + q1[3], q1[1] * a + 2 * q1[2] * b + q1[4]],
             [2 * q2[0] * a + q2[1] * b + q2[3], q2[1] * a + 2 * q2[2] * b + q2[4]]]
        )

    found = []
    for a, b in itertools.product(np.linspace(-box, box, n), repeat=2):
        x = np.array([a, b])
        for _ in range(60):
            f = np.array(qp(*x))
            try:
                x = x - np.linalg.solve(jac(*x), f)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.abs(x) < 1e6):
                break
        if np.all(np.abs(x) < 1e6) and max(map(abs, qp(*x))) < 1e-11:
            if all(np.hypot(*(x - y)) > 1e-6 for y in found):
                found.append(x)
    return found


def test_circle_line_intersection():
    qp = QuadraticPair([1, 0, 1, 0, 0, -1], [0, 0, 0, 1, -1, 0])
    roots = sorted(solve_quadratic_pair(qp))
    assert len(roots) == 2
    assert np.allclose(roots, [(-S, -S), (S, S)], atol=1e-12)


def test_no_real_roots():
    assert solve_quadratic_pair(QuadraticPair([1, 0, 1, 0, 0, 1], [0, 0, 0, 1, -1, 0])) == []


def test_identical_quadratics_have_no_finite_set():
    q = [1, 0, 1, 0, 0, -1]
    with pytest.raises(NonFiniteSolutionSet):
        solve_quadratic_pair(QuadraticPair(q, q))


def test_all_zero_rejected():
    with pytest.raises(ValueError):
        QuadraticPair(np.zeros(6), np.zeros(6))


def test_random_pairs_match_grid_oracle():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(25):
        qp = QuadraticPair(rng.normal(size=6), rng.normal(size=6))
        ours = [np.array(r) for r in solve_quadratic_pair(qp)]
        assert len(ours) <= 4
        for r in ours:
            f1, f2 = qp(*r)
            assert max(abs(f1), abs(f2)) < 1e-8 * max(1, np.abs(qp.q1).max(), np.abs(qp.q2).max()) * max(1, r @ r)
        oracle = _grid_newton(qp)
        inside = [r for r in ours if np.all(np.abs(r) < 3.5)]
        # every oracle root is ours, and every root of ours well inside the grid is the oracle's
        for o in oracle:
            assert min(np.hypot(*(o - r)) for r in ours) < 1e-6
        for r in inside:
            assert min(np.hypot(*(o - r)) for o in oracle) < 1e-6
        checked += len(oracle)
    assert checked > 10


def test_cubic_pair_random_residuals():
    rng = np.random.default_rng(3)
    for _ in range(20):
        F = np.triu(rng.normal(size=(4, 4)))[:, ::-1]  # total degree <= 3
        G = np.triu(rng.normal(size=(4, 4)))[:, ::-1]
        roots = solve_cubic_pair(F, G)
        assert len(roots) <= 9
        for x, y in roots:
            scale = max(1.0, abs(x), abs(y)) ** 3
            assert abs(eval2(F, x, y)) < 1e-7 * scale and abs(eval2(G, x, y)) < 1e-7 * scale
