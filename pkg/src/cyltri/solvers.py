"""Cross-section solvers in the rectified plane.

* :func:`solve_minimal_three_lines` - circles tangent to three lines, from the
  nullspace of the tangency equations intersected with the circle manifold.
* :func:`solve_constrained_lsq` - global minimiser of the algebraic tangency
  cost over circles, by enumerating all Lagrangian stationary points.
* :func:`solve_linear_conic` - unconstrained linear dual-conic fit.

All functions take 2D lines as an (n, 3) array with unit normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DegenerateConic,
    DegenerateLines,
    EliminationSingular,
    ImaginaryRadius,
    InvalidInput,
    NonFiniteSolutionSet,
    NoRealCircle,
    NotACircle,
    RankDeficient,
)
from .geometry import (
    Circle2D,
    DualConic2D,
    circle_from_dual_conic,
    dual_conic_from_circle,
    manifold_residuals,
    tangency_rows,
)
from .polysys import QuadraticPair, cubic_pair_from_companion

# c(d) = d^T C d for the two circle-manifold constraints
_C1 = np.zeros((6, 6))
_C1[2, 4] = _C1[4, 2] = 0.5
_C1[1, 5] = _C1[5, 1] = -0.5
_C2 = np.zeros((6, 6))
_C2[4, 4] = 1.0
_C2[2, 2] = -1.0
_C2[0, 5] = _C2[5, 0] = 0.5
_C2[3, 5] = _C2[5, 3] = -0.5


def _as_lines(lines) -> np.ndarray:
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    n = np.hypot(lines[:, 0], lines[:, 1])
    if np.any(n == 0):
        raise InvalidInput("line at infinity")
    return lines / n[:, None]


def lsq_cost(lines, circle: Circle2D) -> float:
    """Algebraic cost ``sum (r_i^T d r_i)^2`` with ``d`` in the ``d6 = -1`` gauge."""
    rows = tangency_rows(_as_lines(lines))
    res = rows @ dual_conic_from_circle(circle).d
    return float(res @ res)


# ---------------------------------------------------------------------------
# minimal three-line solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NullspaceBasis:
    """``d = alpha * d_alpha + beta * d_beta + d_gamma``."""

    d_alpha: np.ndarray
    d_beta: np.ndarray
    d_gamma: np.ndarray

    def conic(self, alpha: float, beta: float) -> np.ndarray:
        return alpha * self.d_alpha + beta * self.d_beta + self.d_gamma


def _three_lines(r1, r2, r3) -> np.ndarray:
    L = np.asarray(r1 if r2 is None else [r1, r2, r3], dtype=float)
    if L.shape != (3, 3):
        raise InvalidInput("exactly three lines are required")
    if not np.isfinite(L).all():
        raise InvalidInput("line coefficients must be finite")
    return L


def _raise_status(status: int):
    if status == _kernels.LINE_AT_INFINITY:
        raise InvalidInput("line at infinity")
    if status == _kernels.DEGENERATE_LINES:
        raise DegenerateLines("tangency equations have rank < 3 (repeated or concurrent lines)")
    if status == _kernels.NO_D6_GAUGE:
        raise DegenerateLines("every tangent dual conic has d6 = 0")
    if status == _kernels.NON_FINITE_SET:
        raise NonFiniteSolutionSet("resultant vanishes identically")


def nullspace_parametrization(r1, r2=None, r3=None, gauge=None) -> NullspaceBasis:
    """Affine parametrisation of the dual conics tangent to three lines.

    The solution space is spanned by point-pair conics on the vertices of
    the triangle the lines form, then orthonormalised. ``d_gamma`` is the
    unit nullspace vector with the largest ``|d6|`` unless ``gauge`` (three
    coordinates in the orthonormal basis) picks another one; ``d_alpha`` and
    ``d_beta`` complete an orthonormal basis.
    """
    L, status = _kernels.normalize_lines(_three_lines(r1, r2, r3))
    _raise_status(status)
    N = np.empty((3, 6))
    _raise_status(_kernels.nullspace(L, N))
    g = N[:, 5].copy() if gauge is None else np.asarray(gauge, dtype=float).reshape(3)
    B = np.empty((3, 6))
    _raise_status(_kernels.gauge_basis(N, g, B))
    return NullspaceBasis(B[0], B[1], B[2])


def manifold_quadratics(basis: NullspaceBasis) -> QuadraticPair:
    """Circle constraints restricted to the affine family of ``basis``."""
    Q = np.empty((2, 6))
    _kernels.manifold_quadratics(np.stack([basis.d_alpha, basis.d_beta, basis.d_gamma]), Q)
    return QuadraticPair(Q[0], Q[1])


_REGAUGE = np.array([0.5377, 0.8622, -0.3188])  # nullspace coordinates; fixed for determinism


def solve_minimal_three_lines(r1, r2=None, r3=None, tol: float = 1e-8) -> list[Circle2D]:
    """Real circles tangent to three lines (at most four).

    Raises DegenerateLines for a rank-deficient tangency system and
    NoRealCircle when no real circle survives.
    """
    out = np.empty((4, 3))
    n, status = _kernels.minimal(_three_lines(r1, r2, r3), _REGAUGE, tol, out)
    _raise_status(status)
    if n == 0:
        raise NoRealCircle("no real circle is tangent to the three lines")
    return [Circle2D(tx, ty, r) for tx, ty, r in out[:n].tolist()]


# ---------------------------------------------------------------------------
# constrained least squares
# ---------------------------------------------------------------------------

# d(d3, d4, d5) with d6 = -1 and the two constraints solved for d1, d2;
# arrays are indexed [power of d3, power of d4, power of d5]
_DPOLY = np.zeros((6, 4, 4, 4))
_DPOLY[0][0, 1, 0] = 1.0
_DPOLY[0][0, 0, 2] = 1.0
_DPOLY[0][2, 0, 0] = -1.0
_DPOLY[1][1, 0, 1] = -1.0
_DPOLY[2][1, 0, 0] = 1.0
_DPOLY[3][0, 1, 0] = 1.0
_DPOLY[4][0, 0, 1] = 1.0
_DPOLY[5][0, 0, 0] = -1.0


def _shift(p, axis):
    out = np.zeros_like(p)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[axis] = slice(0, 3)
    dst[axis] = slice(1, 4)
    out[tuple(dst)] = p[tuple(src)]
    return out


def _polyval3(p, d3, d4, d5):
    return float(np.polynomial.polynomial.polyval3d(d3, d4, d5, p))


# _PROD[i, j, k] = 1 when monomial i times monomial j is monomial k (4x4 grids, truncated)
_PROD = np.zeros((16, 16, 16))
for _i in range(16):
    for _j in range(16):
        _a, _b = divmod(_i, 4)
        _c, _d = divmod(_j, 4)
        if _a + _c < 4 and _b + _d < 4:
            _PROD[_i, _j, 4 * (_a + _c) + _b + _d] = 1.0
_PROD = _PROD.reshape(16, 256)


@dataclass(frozen=True, eq=False)
class StationarySystem:
    """Lagrangian stationarity conditions with ``d1, d2, l1, l2`` eliminated.

    ``g3``, ``g4``, ``g5`` are dL/dd3, dL/dd4, dL/dd5 as polynomials in
    ``(d3, d4, d5)``; ``g4`` has total degree 2 and the others degree 3.
    """

    M: np.ndarray
    g3: np.ndarray
    g4: np.ndarray
    g5: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray

    def back_substitute(self, d3: float, d4: float, d5: float) -> tuple[float, float, float, float]:
        """``(d1, d2, lambda1, lambda2)`` on the solution of the four linear equations."""
        d1 = d4 + d5 * d5 - d3 * d3
        d2 = -d3 * d5
        return d1, d2, _polyval3(self.lam1, d3, d4, d5), _polyval3(self.lam2, d3, d4, d5)

    def equations(self, d3: float, d4: float, d5: float) -> np.ndarray:
        return np.array([_polyval3(g, d3, d4, d5) for g in (self.g3, self.g4, self.g5)])

    def lagrangian(self, x) -> float:
        """``L`` at ``x = (d1, ..., d5, lambda1, lambda2)`` with ``d6 = -1``."""
        d = np.append(np.asarray(x[:5], dtype=float), -1.0)
        return float(d @ self.M @ d + x[5] * (d @ _C1 @ d) + x[6] * (d @ _C2 @ d))

    def gradient(self, x) -> np.ndarray:
        d = np.append(np.asarray(x[:5], dtype=float), -1.0)
        g = 2 * self.M @ d + 2 * x[5] * (_C1 @ d) + 2 * x[6] * (_C2 @ d)
        return np.concatenate([g[:5], [d @ _C1 @ d, d @ _C2 @ d]])

    def reduce(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Eliminate ``d4`` with the degree-2 equation (it is linear in ``d4``).

        Returns ``(Q, F, G)`` as 4x4 arrays over ``(d3, d5)``: ``d4 = Q`` and the
        remaining cubics ``F = g3``, ``G = g5`` after substitution.
        """
        k = self.g4[0, 1, 0]
        Q = -self.g4[:, 0, :] / k
        B = np.stack([self.g3[:, 1, :], self.g5[:, 1, :]]).reshape(2, 16)
        FG = B @ (Q.reshape(1, 16) @ _PROD).reshape(16, 16)
        return Q, self.g3[:, 0, :] + FG[0].reshape(4, 4), self.g5[:, 0, :] + FG[1].reshape(4, 4)


def _check_normals(lines):
    a, b = lines[:, 0], lines[:, 1]
    sxx, syy, sxy = a @ a, b @ b, a @ b
    # eigenvalues of the 2x2 normal scatter
    h = math.hypot(0.5 * (sxx - syy), sxy)
    lo, hi = 0.5 * (sxx + syy) - h, 0.5 * (sxx + syy) + h
    if lo <= 1e-12 * hi:
        raise EliminationSingular("all line normals are parallel; centre is not determined")


def build_stationary_system(lines) -> StationarySystem:
    """Stationarity system of ``sum (r^T d r)^2 + l1 c1(d) + l2 c2(d)``, ``d6 = -1``.

    The four equations dL/dd1, dL/dd2, dL/dl1, dL/dl2 are linear in
    ``(d1, d2, l1, l2)`` with a constant unimodular matrix, so they are always
    solvable; degeneracy shows up instead as a non-isolated centre when all
    line normals are parallel, which raises EliminationSingular.
    """
    lines = _as_lines(lines)
    if len(lines) < 4:
        raise InvalidInput("constrained least squares needs at least 4 lines")
    _check_normals(lines)
    A = tangency_rows(lines)
    M = A.T @ A
    g3, g4, g5, lam1, lam2 = (M.reshape(1, 36) @ _SYSTEM_MAP).reshape(5, 4, 4, 4)
    return StationarySystem(M, g3, g4, g5, lam1, lam2)


def _system_polys(M):
    MD = np.tensordot(M, _DPOLY, axes=1)
    lam2 = 2 * MD[0]  # dL/dd1 = 2 (Md)_1 - l2
    lam1 = -2 * MD[1]  # dL/dd2 = 2 (Md)_2 + l1
    g3 = 2 * MD[2] + _shift(lam1, 2) - 2 * _shift(lam2, 0)
    g4 = 2 * MD[3] + lam2
    g5 = 2 * MD[4] + _shift(lam1, 0) + 2 * _shift(lam2, 2)
    return np.stack([g3, g4, g5, lam1, lam2])


# the system polynomials are linear in M; tabulate the map once
_SYSTEM_MAP = np.stack([_system_polys(E.reshape(6, 6)).ravel() for E in np.eye(36)])


@dataclass(frozen=True, eq=False)
class StationaryPoint:
    circle: Circle2D | None  # None for imaginary circles
    d: np.ndarray  # d1..d6 with d6 = -1
    lam1: float
    lam2: float
    cost: float

    @property
    def x(self) -> np.ndarray:
        """``(d1, ..., d5, lambda1, lambda2)``."""
        return np.concatenate([self.d[:5], [self.lam1, self.lam2]])


_FRAME_ANGLE = 0.4142  # generic rotation: keeps roots from sharing a d3 value
_FRAME = np.array([[math.cos(_FRAME_ANGLE), -math.sin(_FRAME_ANGLE)],
                   [math.sin(_FRAME_ANGLE), math.cos(_FRAME_ANGLE)]])


def constrained_lsq_stationary(lines) -> list[StationaryPoint]:
    """All real stationary points (at most nine), sorted by cost.

    The system is solved on a similarity-normalised copy of the lines (the
    stationary set is similarity-equivariant) and mapped back.
    """
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    if len(lines) < 4:
        raise InvalidInput("constrained least squares needs at least 4 lines")
    if not np.isfinite(lines).all():
        raise InvalidInput("line coefficients must be finite")
    L, C, F, G, Q, x0, p0, k, status = _kernels.lsq_setup(lines, _SYSTEM_MAP, _PROD, _FRAME)
    if status == _kernels.LINE_AT_INFINITY:
        raise InvalidInput("line at infinity")
    if status == _kernels.PARALLEL_NORMALS:
        raise EliminationSingular("all line normals are parallel; centre is not determined")
    if status != _kernels.OK:
        # symmetric data (e.g. >= 5 equally spaced tangents) has non-isolated
        # stationary sets; fall back to local minima from many starts
        return _stationary_by_descent(L)
    roots = cubic_pair_from_companion(C, x0, F, G)
    out = np.empty((len(roots), 10))
    _kernels.lsq_points(L, roots, len(roots), Q, p0, k, _FRAME, out)

    points = []
    for row in out[np.argsort(out[:, 8], kind="stable")]:
        s = row[9]
        circle = Circle2D(-row[2], -row[4], math.sqrt(s)) if s > 0 else None
        points.append(StationaryPoint(circle, row[:6].copy(), float(row[6]), float(row[7]), float(row[8])))
    return points


def _stationary_point(L: np.ndarray, tx: float, ty: float, r: float) -> StationaryPoint:
    s = r * r
    d = np.array([s - tx * tx, -tx * ty, -tx, s - ty * ty, -ty, -1.0])
    M = tangency_rows(L).T @ tangency_rows(L)
    Md = M @ d
    return StationaryPoint(Circle2D(tx, ty, r), d, float(-2 * Md[1]), float(2 * Md[0]), float(d @ Md))


def _descend(L: np.ndarray, p: np.ndarray, iterations: int = 100) -> np.ndarray:
    """Levenberg-Marquardt on ``e_i = r^2 - (n_i . t + c_i)^2``."""
    mu = 1e-3

    def resid(p):
        return p[2] ** 2 - (L[:, :2] @ p[:2] + L[:, 2]) ** 2

    e = resid(p)
    for _ in range(iterations):
        u = L[:, :2] @ p[:2] + L[:, 2]
        J = np.column_stack([-2 * u * L[:, 0], -2 * u * L[:, 1], np.full(len(L), 2 * p[2])])
        H, g = J.T @ J, J.T @ e
        step = np.linalg.solve(H + mu * np.diag(np.diag(H) + 1e-300), -g)
        q = p + step
        eq = resid(q)
        if eq @ eq < e @ e:
            p, e, mu = q, eq, max(mu / 5, 1e-15)
            if np.abs(step).max() <= 1e-15 * max(1.0, np.abs(p).max()):
                break
        else:
            mu *= 4
            if mu > 1e12:
                break
    return p


def _stationary_by_descent(L: np.ndarray) -> list[StationaryPoint]:
    starts = []
    n = len(L)
    for i in range(n):
        try:
            starts += [c.as_array() for c in solve_minimal_three_lines(L[[i, (i + 1) % n, (i + 2) % n]])]
        except (DegenerateLines, NoRealCircle, NonFiniteSolutionSet):
            continue
    points: list[StationaryPoint] = []
    for p0 in starts:
        p = _descend(L, p0)
        if not (np.isfinite(p).all() and p[2] != 0):
            continue
        if any(np.abs(q.circle.as_array() - [p[0], p[1], abs(p[2])]).max() < 1e-8 * max(1, np.abs(p).max())
               for q in points):
            continue
        points.append(_stationary_point(L, p[0], p[1], abs(p[2])))
        if len(points) == 9:
            break
    return sorted(points, key=lambda q: q.cost)


def solve_constrained_lsq(lines) -> tuple[Circle2D, list[Circle2D]]:
    """Minimum-cost circle and every real-circle stationary point (sorted by cost)."""
    points = constrained_lsq_stationary(lines)
    circles = [p.circle for p in points if p.circle is not None]
    if not circles:
        raise NoRealCircle("no stationary point is a real circle")
    return circles[0], circles


# ---------------------------------------------------------------------------
# linear baseline and conic classification
# ---------------------------------------------------------------------------


def solve_linear_conic(lines, allow_underdetermined: bool = False) -> DualConic2D:
    """Smallest right singular vector of the n x 6 tangency system.

    With ``allow_underdetermined`` a rank-deficient system still returns the
    last singular vector (an arbitrary member of the solution space).
    """
    A = tangency_rows(_as_lines(lines))
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    if not allow_underdetermined and (len(s) < 5 or s[4] <= 1e-12 * s[0]):
        raise RankDeficient(f"tangency system has rank < 5 with {len(A)} lines")
    return DualConic2D(vt[-1])


CONIC_CLASSES = ("circle", "ellipse", "hyperbola", "parabola", "degenerate")


def classify_conic(conic: DualConic2D | np.ndarray, circle_tol: float = 1e-8) -> str:
    """Type of the point conic dual to ``conic``.

    Imaginary ellipses (no real points) are reported as ``"degenerate"``.
    """
    d = conic.d if isinstance(conic, DualConic2D) else np.asarray(conic, dtype=float)
    d = d / np.linalg.norm(d)
    D = np.array([[d[0], d[1], d[2]], [d[1], d[3], d[4]], [d[2], d[4], d[5]]])
    det = np.linalg.det(D)
    if abs(det) < 1e-12:
        return "degenerate"
    C = np.linalg.inv(D) * det  # adjugate
    minor = C[0, 0] * C[1, 1] - C[0, 1] ** 2
    scale = np.abs(C).max() ** 2
    if abs(minor) <= 1e-10 * scale:
        return "parabola"
    if minor < 0:
        return "hyperbola"
    if np.linalg.det(C) * (C[0, 0] + C[1, 1]) > 0:
        return "degenerate"
    c1, c2 = manifold_residuals(d)
    if abs(c1) <= circle_tol and abs(c2) <= circle_tol:
        return "circle"
    return "ellipse"


def circle_from_linear_conic(conic: DualConic2D) -> tuple[Circle2D, str]:
    """Read a circle from a linear fit; ellipses give their centre and mean
    squared semi-axis. Other classes raise NotACircle."""
    cls = classify_conic(conic)
    if cls not in ("circle", "ellipse"):
        raise NotACircle(f"linear estimate is a {cls}, not a circle", cls)
    d = conic.d / -conic.d[5]
    r2 = 0.5 * (d[0] + d[2] ** 2 + d[3] + d[4] ** 2)
    if not r2 > 0:
        raise NotACircle("linear estimate has no real radius", cls)
    return Circle2D(-d[2], -d[4], math.sqrt(r2)), cls
