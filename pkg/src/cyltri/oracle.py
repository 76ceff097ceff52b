"""Independent multistart check for the constrained least-squares solver.

Minimises ``sum_i ((n_i . t + c_i)^2 - r^2)^2`` directly over circle
parameters ``(tx, ty, r)`` with damped Newton steps from many random starts.
Nothing here shares code with the polynomial solver it verifies.
"""

from __future__ import annotations

import numpy as np

from .geometry import Circle2D


def _unit(lines):
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    return lines / np.hypot(lines[:, 0], lines[:, 1])[:, None]


def oracle_cost(lines, params) -> np.ndarray:
    """Cost at ``params`` (..., 3) = (tx, ty, r)."""
    L = _unit(lines)
    params = np.asarray(params, dtype=float)
    dist = params[..., :2] @ L[:, :2].T + L[:, 2]
    e = dist**2 - params[..., 2:3] ** 2
    return np.sum(e * e, axis=-1)


def oracle_gradient(lines, params) -> np.ndarray:
    """Analytic gradient of :func:`oracle_cost`."""
    L = _unit(lines)
    params = np.asarray(params, dtype=float)
    dist = params[..., :2] @ L[:, :2].T + L[:, 2]
    e = dist**2 - params[..., 2:3] ** 2
    gt = 4 * (e * dist) @ L[:, :2]
    gr = -4 * params[..., 2] * e.sum(axis=-1)
    return np.concatenate([gt, gr[..., None]], axis=-1)


def numerical_gradient(f, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h
        g[i] = (f(x + step) - f(x - step)) / (2 * h)
    return g


def _newton_terms(L, P):
    n, c = L[:, :2], L[:, 2]
    dist = P[:, :2] @ n.T + c  # (S, m)
    r = P[:, 2]
    e = dist**2 - r[:, None] ** 2
    J = np.concatenate([2 * dist[:, :, None] * n[None], -2 * r[:, None, None] * np.ones_like(dist)[:, :, None]], axis=2)
    g = 2 * np.einsum("smk,sm->sk", J, e)
    H = 2 * np.einsum("smk,sml->skl", J, J)
    H[:, :2, :2] += 4 * np.einsum("sm,mk,ml->skl", e, n, n)
    H[:, 2, 2] -= 4 * e.sum(axis=1)
    return np.sum(e * e, axis=1), g, H


def oracle_lsq(lines, starts: int = 100, rng=0, iterations: int = 200, return_cost: bool = False):
    """Best circle over ``starts`` damped-Newton descents.

    Each start draws a scale ``s`` log-uniformly from ``[b, 100 b]`` with
    ``b = 3 max|c| + 1`` (``c`` the unit-normal line offsets), then the centre
    uniformly from ``[-s, s]^2`` and the radius from ``[0, s]``. Near-tangent
    circles of few lines can sit far outside the lines' bounding box.
    """
    L = _unit(lines)
    if len(L) < 4:
        raise ValueError("oracle_lsq needs at least 4 lines")
    rng = np.random.default_rng(rng)
    box = 3 * np.abs(L[:, 2]).max() + 1
    s = box * 10 ** rng.uniform(0, 2, starts)
    P = np.column_stack([rng.uniform(-1, 1, (starts, 2)), rng.uniform(0, 1, starts)]) * s[:, None]
    mu = np.full(starts, 1e-3)
    cost, g, H = _newton_terms(L, P)
    eye = np.eye(3)
    for _ in range(iterations):
        # Levenberg-Marquardt on the full Hessian, damping relative to its scale
        scale = np.abs(H).max(axis=(1, 2)) + 1e-300
        A = H + (mu * scale)[:, None, None] * eye
        step = np.linalg.solve(A, -g[:, :, None])[:, :, 0]
        trial = P + step
        tc, tg, tH = _newton_terms(L, trial)
        better = np.isfinite(tc) & (tc < cost)
        P = np.where(better[:, None], trial, P)
        cost = np.where(better, tc, cost)
        g = np.where(better[:, None], tg, g)
        H = np.where(better[:, None, None], tH, H)
        mu = np.where(better, np.maximum(mu / 5, 1e-15), mu * 4)
        if np.all(mu > 1e8):
            break
    best = int(np.argmin(cost))
    tx, ty, r = P[best]
    circle = Circle2D(tx, ty, abs(r)) if abs(r) > 0 else None
    if return_cost:
        return circle, float(cost[best])
    return circle
