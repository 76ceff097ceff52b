"""Small bivariate polynomial systems.

Two kernels:

* a pair of quadratics in ``(a, b)``: Sylvester resultant in ``b`` gives a
  quartic in ``a`` whose roots come from companion-matrix eigenvalues;
* a pair of cubics in ``(x, y)``: ``y`` is eliminated with the 6x6 Sylvester
  matrix, whose entries are cubic in the hidden variable ``x``; after a
  shift that makes the leading block invertible, the matrix polynomial is
  linearised to an 18x18 companion eigenproblem.

Roots of both get a few Newton steps on the original system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NonFiniteSolutionSet

# monomial order for quadratic coefficient vectors
QUADRATIC_MONOMIALS = ("a^2", "ab", "b^2", "a", "b", "1")

RESIDUAL_TOL = 1e-8
NEWTON_STEPS = 3


@dataclass(frozen=True, eq=False)
class QuadraticPair:
    """Two quadratics in ``(alpha, beta)``; coefficients in QUADRATIC_MONOMIALS order."""

    q1: np.ndarray
    q2: np.ndarray

    def __post_init__(self):
        q1 = np.asarray(self.q1, dtype=float).reshape(6)
        q2 = np.asarray(self.q2, dtype=float).reshape(6)
        if not (np.any(q1) or np.any(q2)):
            raise ValueError("both quadratics are identically zero")
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)

    def __call__(self, alpha: float, beta: float) -> tuple[float, float]:
        return _qeval(self.q1, alpha, beta), _qeval(self.q2, alpha, beta)


def _qeval(q, a, b):
    return q[0] * a * a + q[1] * a * b + q[2] * b * b + q[3] * a + q[4] * b + q[5]


def solve_quadratic_pair_with_lead(qp: QuadraticPair, tol: float = RESIDUAL_TOL):
    """Like :func:`solve_quadratic_pair` but also returns the resultant's
    relative leading coefficient (small values mean roots near infinity)."""
    out = np.empty((8, 2))
    n, lead, status = _kernels.quadratic_pair(qp.q1, qp.q2, tol, out)
    if status == _kernels.NON_FINITE_SET:
        raise NonFiniteSolutionSet("resultant vanishes identically")
    return [(float(a), float(b)) for a, b in out[:n]], lead


def solve_quadratic_pair(qp: QuadraticPair, tol: float = RESIDUAL_TOL) -> list[tuple[float, float]]:
    """All real common roots ``(alpha, beta)`` of two bivariate quadratics.

    ``b`` is eliminated with the Sylvester resultant; the quartic in ``a``
    is solved by companion-matrix eigenvalues and each root is back
    substituted and polished with Newton steps. When neither variable has a
    square term the pair is first rotated by a fixed generic angle.
    """
    return solve_quadratic_pair_with_lead(qp, tol)[0]


# ---------------------------------------------------------------------------
# cubic pairs
# ---------------------------------------------------------------------------


def eval2(C, x, y):
    """Evaluate bivariate polynomial(s) ``sum C[i, k] x^i y^k`` at arrays x, y."""
    return np.polynomial.polynomial.polyval2d(x, y, C)


def cubic_pair_from_companion(C: np.ndarray, x0: float, F, G, tol: float = 1e-9) -> np.ndarray:
    mu, vr = np.linalg.eig(C)
    out = np.empty((18, 3))
    m = _kernels.cubic_pair_roots(mu, vr, F, G, x0, tol, out)
    return out[:m, :2][np.argsort(out[:m, 2], kind="stable")]


def solve_cubic_pair(F: np.ndarray, G: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Real common roots of two bivariate cubics given as 4x4 coefficient arrays.

    ``F[i, k]`` multiplies ``x^i y^k``. Returns an (m, 2) array, m <= 9 for a
    zero-dimensional system.

    The hidden variable is substituted as ``x = x0 + 1/mu`` so that the
    leading block ``S(x0)`` is invertible and a standard eigenproblem in
    ``mu`` remains; roots at ``x = inf`` become ``mu = 0`` and are dropped.
    """
    F = np.asarray(F, dtype=float).reshape(4, 4)
    G = np.asarray(G, dtype=float).reshape(4, 4)
    if not (np.any(F) and np.any(G)):
        raise NonFiniteSolutionSet("a cubic vanishes identically")
    F = F / np.abs(F).max()
    G = G / np.abs(G).max()
    if not (np.any(F[1:]) or np.any(G[1:])):
        raise NonFiniteSolutionSet("hidden variable does not appear")
    C, x0, status = _kernels.cubic_pair_companion(F, G)
    if status != _kernels.OK:
        raise NonFiniteSolutionSet("Sylvester matrix is singular at every shift")
    return cubic_pair_from_companion(C, x0, F, G, tol)
