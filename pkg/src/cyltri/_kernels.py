"""Compiled inner loops of the three-line and least-squares solvers.

Everything here runs under ``numba.njit`` on plain float arrays and reports
failures as integer status codes; the public wrappers in :mod:`polysys` and
:mod:`solvers` translate the codes into exceptions.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

OK = 0
LINE_AT_INFINITY = 1
DEGENERATE_LINES = 2
NO_D6_GAUGE = 3
NON_FINITE_SET = 4

REAL_TOL = 1e-5
NEWTON_STEPS = 3
_SQUARE_TOL = 1e-10
_ROT_ANGLE = 0.61803  # generic rotation used when neither variable has a square term


@njit(cache=True)
def qeval(q, a, b):
    return (q[0] * a + q[1] * b + q[3]) * a + (q[2] * b + q[4]) * b + q[5]


@njit(cache=True)
def qscale(q, a, b):
    return (
        abs(q[0] * a * a) + abs(q[1] * a * b) + abs(q[2] * b * b)
        + abs(q[3] * a) + abs(q[4] * b) + abs(q[5])
    )


@njit(cache=True)
def _polish_pair(q1, q2, a, b, out, k):
    """Newton steps on the pair; writes ``(a, b, q1, q2)`` to ``out[k]``."""
    f1 = qeval(q1, a, b)
    f2 = qeval(q2, a, b)
    r = abs(f1) + abs(f2)
    # coefficients are normalised to max 1, so this bounds the evaluation scale
    done = 1e-14 * (1.0 + abs(a) + abs(b)) ** 2
    for _ in range(NEWTON_STEPS):
        if r <= done:
            break
        j11 = 2 * q1[0] * a + q1[1] * b + q1[3]
        j12 = q1[1] * a + 2 * q1[2] * b + q1[4]
        j21 = 2 * q2[0] * a + q2[1] * b + q2[3]
        j22 = q2[1] * a + 2 * q2[2] * b + q2[4]
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            break
        na = a - (j22 * f1 - j12 * f2) / det
        nb = b - (j11 * f2 - j21 * f1) / det
        n1 = qeval(q1, na, nb)
        n2 = qeval(q2, na, nb)
        nr = abs(n1) + abs(n2)
        if not nr < r:
            break
        a, b, f1, f2, r = na, nb, n1, n2, nr
    out[k, 0] = a
    out[k, 1] = b
    out[k, 2] = f1
    out[k, 3] = f2


@njit(cache=True)
def real_roots(c, trim, out):
    """Real roots of ``sum c[i] x^i`` into ``out``; returns their count.

    Leading coefficients below ``trim`` relative to the largest are dropped;
    the remaining polynomial is solved by companion-matrix eigenvalues.
    """
    scale = 0.0
    for v in c:
        scale = max(scale, abs(v))
    deg = len(c) - 1
    while deg > 0 and abs(c[deg]) <= trim * scale:
        deg -= 1
    if deg == 0:
        return 0
    if deg == 1:
        out[0] = -c[0] / c[1]
        return 1
    comp = np.zeros((deg, deg), dtype=np.complex128)
    for j in range(deg):
        comp[0, j] = -c[deg - 1 - j] / c[deg]
    for i in range(1, deg):
        comp[i, i - 1] = 1.0
    z = np.linalg.eigvals(comp)
    m = 0
    for w in z:
        if abs(w.imag) <= REAL_TOL * (1.0 + abs(w.real)):
            out[m] = w.real
            m += 1
    return m


@njit(cache=True)
def _solve_oriented(q1, q2, out):
    """Eliminate ``b`` (needs a b^2 term); candidates ``(a, b, q1, q2)`` into ``out``.

    Returns ``(count, lead, status)`` where ``lead`` is the resultant's
    relative leading coefficient.
    """
    # q_i = a_i b^2 + B_i(a) b + C_i(a); resultant = u^2 - v w
    a1, a2 = q1[2], q2[2]
    u0 = a1 * q2[5] - a2 * q1[5]
    u1 = a1 * q2[3] - a2 * q1[3]
    u2 = a1 * q2[0] - a2 * q1[0]
    v0 = a1 * q2[4] - a2 * q1[4]
    v1 = a1 * q2[1] - a2 * q1[1]
    # w = B1 C2 - B2 C1
    w0 = q1[4] * q2[5] - q2[4] * q1[5]
    w1 = q1[4] * q2[3] + q1[1] * q2[5] - q2[4] * q1[3] - q2[1] * q1[5]
    w2 = q1[4] * q2[0] + q1[1] * q2[3] - q2[4] * q1[0] - q2[1] * q1[3]
    w3 = q1[1] * q2[0] - q2[1] * q1[0]
    res = np.empty(5)
    res[0] = u0 * u0 - v0 * w0
    res[1] = 2 * u0 * u1 - v0 * w1 - v1 * w0
    res[2] = u1 * u1 + 2 * u0 * u2 - v0 * w2 - v1 * w1
    res[3] = 2 * u1 * u2 - v0 * w3 - v1 * w2
    res[4] = u2 * u2 - v1 * w3
    big = 0.0
    for v in res:
        big = max(big, abs(v))
    if big <= 1e-13:
        return 0, 0.0, NON_FINITE_SET
    lead = abs(res[4]) / big

    roots = np.empty(4)
    nroots = real_roots(res, 1e-12, roots)
    qq = q1 if abs(a1) >= abs(a2) else q2
    cb = np.empty(3)
    bs = np.empty(2)
    m = 0
    for i in range(nroots):
        a = roots[i]
        ua = u0 + u1 * a + u2 * a * a
        va = v0 + v1 * a
        if abs(va) > 1e-8 * (abs(ua) + abs(v0) + abs(v1 * a)):
            _polish_pair(q1, q2, a, -ua / va, out, m)
            m += 1
        else:
            # shared a-coordinate: take every root of a nondegenerate member
            cb[0] = qq[5] + qq[3] * a + qq[0] * a * a
            cb[1] = qq[4] + qq[1] * a
            cb[2] = qq[2]
            nb = real_roots(cb, 1e-14, bs)
            for j in range(nb):
                _polish_pair(q1, q2, a, bs[j], out, m)
                m += 1
    return m, lead, OK


@njit(cache=True)
def quadratic_pair(q1_in, q2_in, tol, out):
    """All real common roots of two quadratics into ``out`` (rows ``(a, b)``).

    Returns ``(count, lead, status)``.
    """
    q1 = q1_in / max(np.abs(q1_in).max(), 1e-300)
    q2 = q2_in / max(np.abs(q2_in).max(), 1e-300)
    cand = np.empty((16, 4))
    if max(abs(q1[2]), abs(q2[2])) > _SQUARE_TOL:
        m, lead, status = _solve_oriented(q1, q2, cand)
        if status == OK and m < 4 and max(abs(q1[0]), abs(q2[0])) > _SQUARE_TOL:
            # roots sharing nearly the same a make back-substitution for b
            # ill-conditioned; eliminating a instead recovers them
            perm = np.array([2, 1, 0, 4, 3, 5])
            extra = np.empty((8, 4))
            k, _, st2 = _solve_oriented(q1[perm], q2[perm], extra)
            if st2 == OK:
                for i in range(k):
                    cand[m, 0] = extra[i, 1]
                    cand[m, 1] = extra[i, 0]
                    cand[m, 2] = extra[i, 2]
                    cand[m, 3] = extra[i, 3]
                    m += 1
    elif max(abs(q1[0]), abs(q2[0])) > _SQUARE_TOL:
        perm = np.array([2, 1, 0, 4, 3, 5])
        m, lead, status = _solve_oriented(q1[perm], q2[perm], cand)
        for i in range(m):
            cand[i, 0], cand[i, 1] = cand[i, 1], cand[i, 0]
    else:
        c, s = math.cos(_ROT_ANGLE), math.sin(_ROT_ANGLE)
        m, lead, status = _solve_oriented(_rotate(q1, c, s), _rotate(q2, c, s), cand)
        for i in range(m):
            u, v = cand[i, 0], cand[i, 1]
            cand[i, 0] = c * u - s * v
            cand[i, 1] = s * u + c * v
    if status != OK:
        return 0, lead, status

    n = 0
    for i in range(m):
        a, b = cand[i, 0], cand[i, 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if abs(cand[i, 2]) > tol * qscale(q1, a, b) or abs(cand[i, 3]) > tol * qscale(q2, a, b):
            continue
        dup = False
        for j in range(n):
            if abs(a - out[j, 0]) + abs(b - out[j, 1]) <= 1e-9 * (1 + abs(a) + abs(b)):
                dup = True
        if dup or n == out.shape[0]:
            continue
        out[n, 0] = a
        out[n, 1] = b
        n += 1
    return n, lead, OK


@njit(cache=True)
def _rotate(q, c, s):
    """Coefficients of q(c*u - s*v, s*u + c*v) in (u, v)."""
    A, B, C, D, E, F = q[0], q[1], q[2], q[3], q[4], q[5]
    r = np.empty(6)
    r[0] = A * c * c + B * c * s + C * s * s
    r[1] = -2 * A * c * s + B * (c * c - s * s) + 2 * C * c * s
    r[2] = A * s * s - B * c * s + C * c * c
    r[3] = D * c + E * s
    r[4] = -D * s + E * c
    r[5] = F
    return r


# ---------------------------------------------------------------------------
# three-line solver
# ---------------------------------------------------------------------------


@njit(cache=True)
def normalize_lines(L):
    """Copy of ``L`` with unit normals; status LINE_AT_INFINITY on a zero normal."""
    out = np.empty_like(L)
    for i in range(L.shape[0]):
        n = math.hypot(L[i, 0], L[i, 1])
        if n == 0.0:
            return out, LINE_AT_INFINITY
        out[i, 0] = L[i, 0] / n
        out[i, 1] = L[i, 1] / n
        out[i, 2] = L[i, 2] / n
    return out, OK


@njit(cache=True)
def _point_pair(p, q, out):
    """Dual conic ``(p q^T + q p^T) / 2`` of a point pair."""
    out[0] = p[0] * q[0]
    out[1] = 0.5 * (p[0] * q[1] + p[1] * q[0])
    out[2] = 0.5 * (p[0] * q[2] + p[2] * q[0])
    out[3] = p[1] * q[1]
    out[4] = 0.5 * (p[1] * q[2] + p[2] * q[1])
    out[5] = p[2] * q[2]


@njit(cache=True)
def nullspace(L, N):
    """Orthonormal basis rows ``N`` (3 x 6) of the dual conics tangent to three lines.

    A point-pair conic satisfies ``l^T D l = (l.p)(l.q)``, so pairs of the
    triangle's vertices span the solution space in closed form. Repeated or
    concurrent lines collapse the span (status DEGENERATE_LINES).
    """
    x12 = np.cross(L[0], L[1])
    x13 = np.cross(L[0], L[2])
    x23 = np.cross(L[1], L[2])
    _point_pair(x12, x13, N[0])
    _point_pair(x12, x23, N[1])
    _point_pair(x13, x23, N[2])
    for i in range(3):
        n0 = math.sqrt(np.dot(N[i], N[i]))
        for j in range(i):
            N[i] -= np.dot(N[j], N[i]) * N[j]
        n = math.sqrt(np.dot(N[i], N[i]))
        if not n > 1e-10 * n0:
            return DEGENERATE_LINES
        N[i] /= n
    return OK


@njit(cache=True)
def gauge_basis(N, g_in, B):
    """Rows ``d_alpha, d_beta, d_gamma`` of ``B`` for the unit gauge ``g``.

    ``d_gamma = g . N``; a Householder reflection taking ``g`` to ``e1``
    supplies the orthonormal complement in its other two columns.
    """
    ng = math.sqrt(np.dot(g_in, g_in))
    if ng < 1e-12:
        return NO_D6_GAUGE
    g = g_in / ng
    k = np.argmax(np.abs(g))
    if g[k] < 0:
        g = -g
    v = g.copy()
    v[0] += 1.0 if g[0] >= 0 else -1.0
    h = 2.0 / np.dot(v, v)
    for row in range(2):
        c = -h * v[row + 1] * v
        c[row + 1] += 1.0
        B[row] = c @ N
    B[2] = g @ N
    return OK


@njit(cache=True)
def _bilinear(a, b):
    """``(a^T C1 b, a^T C2 b)`` for the two circle constraints."""
    c1 = 0.5 * (a[2] * b[4] + a[4] * b[2] - a[1] * b[5] - a[5] * b[1])
    c2 = a[4] * b[4] - a[2] * b[2] + 0.5 * (a[0] * b[5] + a[5] * b[0] - a[3] * b[5] - a[5] * b[3])
    return c1, c2


@njit(cache=True)
def manifold_quadratics(B, Q):
    """Both circle constraints on ``d = a B[0] + b B[1] + B[2]`` into ``Q`` (2 x 6)."""
    pairs = ((0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0), (0, 2, 2.0), (1, 2, 2.0), (2, 2, 1.0))
    for k in range(6):
        i, j, w = pairs[k]
        c1, c2 = _bilinear(B[i], B[j])
        Q[0, k] = w * c1
        Q[1, k] = w * c2


@njit(cache=True)
def _circles_from_roots(L, B, roots, n, tol, out):
    m = 0
    for i in range(n):
        d = roots[i, 0] * B[0] + roots[i, 1] * B[1] + B[2]
        if abs(d[5]) <= 1e-12 * math.sqrt(np.dot(d, d)):
            continue  # centre at infinity
        tx = d[2] / d[5]
        ty = d[4] / d[5]
        r2 = -d[0] / d[5] + tx * tx
        if not r2 > 0:
            continue  # imaginary radius
        r = math.sqrt(r2)
        scale = max(1.0, r, abs(tx), abs(ty))
        ok = True
        for j in range(3):
            if abs(abs(L[j, 0] * tx + L[j, 1] * ty + L[j, 2]) - r) > tol * scale:
                ok = False
        if ok and m < 4:
            tx, ty, r = _polish_circle(L, tx, ty, r)
            out[m, 0] = tx
            out[m, 1] = ty
            out[m, 2] = r
            m += 1
    if m < 4:
        m = _complete_by_sides(L, tol, out, m)
    return m


@njit(cache=True)
def _side_class(L, tx, ty):
    """Index 0..3 of the side pattern, with the first line's side fixed."""
    s0 = L[0, 0] * tx + L[0, 1] * ty + L[0, 2] >= 0
    k = 0
    for j in (1, 2):
        sj = L[j, 0] * tx + L[j, 1] * ty + L[j, 2] >= 0
        if sj != s0:
            k += j
    return k


@njit(cache=True)
def _complete_by_sides(L, tol, out, m):
    """Add circles for side patterns the algebraic roots missed.

    Near-concurrent or near-parallel triples give resultants with clustered
    roots, and a root can be lost; each pattern is one 3x3 linear system.
    """
    have = np.zeros(4, dtype=np.bool_)
    for i in range(m):
        have[_side_class(L, out[i, 0], out[i, 1])] = True
    A = np.empty((3, 3))
    b = np.empty(3)
    for k in range(4):
        if have[k] or m >= 4:
            continue
        for j in range(3):
            flip = (j == 1 and (k & 1)) or (j == 2 and (k & 2))
            A[j, 0] = L[j, 0]
            A[j, 1] = L[j, 1]
            A[j, 2] = 1.0 if flip else -1.0
            b[j] = -L[j, 2]
        if abs(np.linalg.det(A)) < 1e-12:
            continue  # parallel pair: no circle on this pattern
        x = np.linalg.solve(A, b)
        if not np.isfinite(x).all() or x[2] == 0.0:
            continue
        tx, ty, r = x[0], x[1], abs(x[2])
        if _max_defect(L, tx, ty, r) > tol * max(1.0, r, abs(tx), abs(ty)):
            continue
        out[m, 0] = tx
        out[m, 1] = ty
        out[m, 2] = r
        m += 1
    return m


@njit(cache=True)
def _max_defect(L, tx, ty, r):
    e = 0.0
    for j in range(3):
        e = max(e, abs(abs(L[j, 0] * tx + L[j, 1] * ty + L[j, 2]) - r))
    return e


@njit(cache=True)
def _polish_circle(L, tx, ty, r):
    """With the side of each line fixed, tangency is linear in ``(tx, ty, r)``."""
    A = np.empty((3, 3))
    b = np.empty(3)
    for j in range(3):
        s = 1.0 if L[j, 0] * tx + L[j, 1] * ty + L[j, 2] >= 0 else -1.0
        A[j, 0] = L[j, 0]
        A[j, 1] = L[j, 1]
        A[j, 2] = -s
        b[j] = -L[j, 2]
    if abs(np.linalg.det(A)) < 1e-300:
        return tx, ty, r
    x = np.linalg.solve(A, b)
    if x[2] > 0 and np.isfinite(x).all() and _max_defect(L, x[0], x[1], x[2]) < _max_defect(L, tx, ty, r):
        return x[0], x[1], x[2]
    return tx, ty, r


@njit(cache=True)
def minimal(L_in, regauge, tol, out):
    """Circles tangent to three lines into ``out`` (rows ``(tx, ty, r)``).

    Returns ``(count, status)``.
    """
    L, status = normalize_lines(L_in)
    if status != OK:
        return 0, status
    N = np.empty((3, 6))
    status = nullspace(L, N)
    if status != OK:
        return 0, status
    B = np.empty((3, 6))
    status = gauge_basis(N, N[:, 5].copy(), B)
    if status != OK:
        return 0, DEGENERATE_LINES
    Q = np.empty((2, 6))
    manifold_quadratics(B, Q)
    roots = np.empty((8, 2))
    n, lead, status = quadratic_pair(Q[0], Q[1], 1e-8, roots)
    if status == OK and lead < 1e-10:
        # roots at the gauge's infinity; move the gauge once
        gauge_basis(N, regauge, B)
        manifold_quadratics(B, Q)
        n, lead, status = quadratic_pair(Q[0], Q[1], 1e-8, roots)
    if status != OK:
        return 0, status
    return _circles_from_roots(L, B, roots, n, tol, out), OK


@njit(cache=True)
def minimal_batch(lines, triples, regauge, tol, circles, hyp):
    """Run :func:`minimal` on every row of ``triples`` (indices into ``lines``).

    Circles go to ``circles`` (rows ``(tx, ty, r)``) and the triple index of
    each to ``hyp``; failing triples contribute nothing. Returns the count.
    """
    L = np.empty((3, 3))
    out = np.empty((4, 3))
    m = 0
    for h in range(triples.shape[0]):
        for j in range(3):
            L[j] = lines[triples[h, j]]
        n, status = minimal(L, regauge, tol, out)
        if status != OK:
            continue
        for i in range(n):
            circles[m] = out[i]
            hyp[m] = h
            m += 1
    return m


# ---------------------------------------------------------------------------
# constrained least squares
# ---------------------------------------------------------------------------

PARALLEL_NORMALS = 5
SINGULAR_SHIFTS = 6

_SHIFTS = (0.7316, -1.3092, 2.2417)


@njit(cache=True)
def parallel_normals(L):
    sxx = syy = sxy = 0.0
    for i in range(L.shape[0]):
        sxx += L[i, 0] * L[i, 0]
        syy += L[i, 1] * L[i, 1]
        sxy += L[i, 0] * L[i, 1]
    # eigenvalues of the 2x2 normal scatter
    h = math.hypot(0.5 * (sxx - syy), sxy)
    return 0.5 * (sxx + syy) - h <= 1e-12 * (0.5 * (sxx + syy) + h)


@njit(cache=True)
def scatter(L):
    """``M = A^T A`` for the tangency rows ``A`` of unit-normal lines."""
    M = np.zeros((6, 6))
    row = np.empty(6)
    for i in range(L.shape[0]):
        a, b, c = L[i, 0], L[i, 1], L[i, 2]
        row[0] = a * a
        row[1] = 2 * a * b
        row[2] = 2 * a * c
        row[3] = b * b
        row[4] = 2 * b * c
        row[5] = c * c
        for p in range(6):
            for q in range(6):
                M[p, q] += row[p] * row[q]
    return M


@njit(cache=True)
def reduced_system(M, system_map, prod):
    """``(Q, F, G)``: ``d4 = Q(d3, d5)`` and the two cubics left after eliminating it."""
    polys = (M.reshape(1, 36) @ system_map).reshape(5, 4, 4, 4)
    g3, g4, g5 = polys[0], polys[1], polys[2]
    Q = -g4[:, 0, :] / g4[0, 1, 0]
    P = (Q.reshape(1, 16) @ prod).reshape(16, 16)
    F = g3[:, 0, :] + (np.ascontiguousarray(g3[:, 1, :]).reshape(1, 16) @ P).reshape(4, 4)
    G = g5[:, 0, :] + (np.ascontiguousarray(g5[:, 1, :]).reshape(1, 16) @ P).reshape(4, 4)
    return Q, F, G


@njit(cache=True)
def _binom(n, k):
    out = 1.0
    for i in range(k):
        out = out * (n - i) / (i + 1)
    return out


@njit(cache=True)
def cubic_pair_companion(F, G):
    """Companion matrix of the hidden-variable Sylvester pencil.

    ``y`` is eliminated with the 6x6 Sylvester matrix ``S(x)`` whose entries
    are cubic in ``x``. With ``x = x0 + 1/mu`` and ``S(x0)`` invertible the
    pencil becomes a monic cubic matrix polynomial in ``mu`` whose 18x18
    block companion matrix is returned with ``x0``.
    """
    S = np.zeros((4, 6, 6))
    for j in range(4):
        for k in range(4):
            for r in range(3):
                S[j, r, r + 3 - k] = F[j, k]
                S[j, 3 + r, r + 3 - k] = G[j, k]
    C = np.zeros((18, 18))
    for x0 in _SHIFTS:
        # T_m = sum_j C(j, i) x0^i S_j with i = m + j - 3
        T = np.zeros((4, 6, 6))
        for j in range(4):
            for i in range(j + 1):
                T[i + 3 - j] += _binom(j, i) * x0**i * S[j]
        lead = T[3]
        # Hadamard ratio: |det| relative to the product of row norms
        prod_norms = 1.0
        for r in range(6):
            prod_norms *= math.sqrt(np.dot(lead[r], lead[r]))
        if prod_norms > 0 and abs(np.linalg.det(lead)) > 1e-8 * prod_norms:
            rhs = np.empty((6, 18))
            for m in range(3):
                rhs[:, 6 * m : 6 * m + 6] = T[m]
            U = np.linalg.solve(lead, rhs)
            for i in range(12):
                C[i, i + 6] = 1.0
            C[12:, :] = -U
            return C, x0, OK
    return C, 0.0, SINGULAR_SHIFTS


@njit(cache=True)
def _eval_cubic(P, x, y):
    """``P(x, y)`` and both partial derivatives for a 4x4 coefficient array."""
    v = dx = dy = 0.0
    xp = np.empty(4)
    yp = np.empty(4)
    xp[0] = yp[0] = 1.0
    for i in range(1, 4):
        xp[i] = xp[i - 1] * x
        yp[i] = yp[i - 1] * y
    for i in range(4):
        for k in range(4):
            c = P[i, k]
            v += c * xp[i] * yp[k]
            if i > 0:
                dx += i * c * xp[i - 1] * yp[k]
            if k > 0:
                dy += k * c * xp[i] * yp[k - 1]
    return v, dx, dy


@njit(cache=True)
def _abs_eval(P, x, y):
    s = 0.0
    for i in range(4):
        for k in range(4):
            s += abs(P[i, k]) * abs(x) ** i * abs(y) ** k
    return s


@njit(cache=True)
def cubic_pair_roots(mu, vr, F, G, x0, tol, out):
    """Real roots of the cubic pair from the companion eigen-decomposition.

    ``mu ~ 0`` are roots at infinity. ``y`` is the ratio of consecutive
    entries of the eigenvector head (the monomials ``y^5 .. 1``). Each root
    gets up to three Newton steps and must leave both residuals below
    ``tol`` relative to the absolute-coefficient scale. Returns the count.
    """
    m = 0
    for e in range(mu.shape[0]):
        if abs(mu[e]) <= 1e-6:
            continue
        z = 1.0 / mu[e]
        if abs(z.imag) > 1e-4 * (1.0 + abs(x0 + z.real)):
            continue
        x = x0 + z.real
        num = 0.0 + 0.0j
        den = 0.0
        for i in range(5):
            num += vr[i, e] * np.conj(vr[i + 1, e])
            den += abs(vr[i + 1, e]) ** 2
        if not den > 0:
            continue
        y = (num / den).real

        f, fx, fy = _eval_cubic(F, x, y)
        g, gx, gy = _eval_cubic(G, x, y)
        r = abs(f) + abs(g)
        for _ in range(NEWTON_STEPS):
            if r <= 1e-14 * (_abs_eval(F, x, y) + _abs_eval(G, x, y)):
                break
            det = fx * gy - fy * gx
            if det == 0.0:
                break
            nx = x - (gy * f - fy * g) / det
            ny = y - (fx * g - gx * f) / det
            nf, nfx, nfy = _eval_cubic(F, nx, ny)
            ng, ngx, ngy = _eval_cubic(G, nx, ny)
            nr = abs(nf) + abs(ng)
            if not nr < r:
                break
            x, y, f, fx, fy, g, gx, gy, r = nx, ny, nf, nfx, nfy, ng, ngx, ngy, nr
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        if abs(f) > tol * _abs_eval(F, x, y) or abs(g) > tol * _abs_eval(G, x, y):
            continue
        dup = -1
        for j in range(m):
            if abs(x - out[j, 0]) + abs(y - out[j, 1]) <= 1e-7 * (1 + abs(x) + abs(y)):
                dup = j
        if dup >= 0:
            if r < out[dup, 2]:
                out[dup, 0], out[dup, 1], out[dup, 2] = x, y, r
            continue
        out[m, 0], out[m, 1], out[m, 2] = x, y, r
        m += 1
    return m


@njit(cache=True)
def lsq_setup(lines, system_map, prod, frame):
    """Normalise the lines and build the companion matrix of the reduced system.

    Returns ``(L, C, F, G, Q, x0, p0, k, status)``; ``L`` has unit normals and
    the reduced system lives in the similarity frame ``p' = R (p - p0) / k``.
    """
    L, status = normalize_lines(lines)
    C = np.zeros((18, 18))
    F = np.zeros((4, 4))
    G = np.zeros((4, 4))
    Q = np.zeros((4, 4))
    p0 = np.zeros(2)
    if status != OK:
        return L, C, F, G, Q, 0.0, p0, 1.0, status
    if parallel_normals(L):
        return L, C, F, G, Q, 0.0, p0, 1.0, PARALLEL_NORMALS

    # least-squares closest point to all lines and the rms offset from it
    n = L.shape[0]
    saa = sab = sbb = sac = sbc = 0.0
    for i in range(n):
        a, b, c = L[i, 0], L[i, 1], L[i, 2]
        saa += a * a
        sab += a * b
        sbb += b * b
        sac += a * c
        sbc += b * c
    det = saa * sbb - sab * sab
    p0[0] = (-sac * sbb + sbc * sab) / det
    p0[1] = (-sbc * saa + sac * sab) / det
    nl = np.empty_like(L)
    ss = 0.0
    for i in range(n):
        a, b = L[i, 0], L[i, 1]
        e = a * p0[0] + b * p0[1] + L[i, 2]
        ss += e * e
        nl[i, 0] = frame[0, 0] * a + frame[0, 1] * b
        nl[i, 1] = frame[1, 0] * a + frame[1, 1] * b
        nl[i, 2] = e
    k = math.sqrt(ss / n)
    if not k > 0:
        k = 1.0
    nl[:, 2] /= k

    Q, F, G = reduced_system(scatter(nl), system_map, prod)
    F = F / np.abs(F).max()
    G = G / np.abs(G).max()
    C, x0, status = cubic_pair_companion(F, G)
    return L, C, F, G, Q, x0, p0, k, status


@njit(cache=True)
def lsq_points(L, roots, m, Q, p0, k, frame, out):
    """Map reduced-frame roots to stationary points.

    ``out`` rows: ``d1..d6`` (``d6 = -1``), ``lambda1``, ``lambda2``, cost, r^2.
    """
    M = scatter(L)
    for i in range(m):
        x, y = roots[i, 0], roots[i, 1]
        q = 0.0
        for a in range(4):
            for b in range(4):
                q += Q[a, b] * x**a * y**b
        s = (q + y * y) * k * k
        # centre (-x, -y) in the reduced frame
        tx = p0[0] - k * (x * frame[0, 0] + y * frame[1, 0])
        ty = p0[1] - k * (x * frame[0, 1] + y * frame[1, 1])
        d = np.array([s - tx * tx, -tx * ty, -tx, s - ty * ty, -ty, -1.0])
        Md = M @ d
        out[i, :6] = d
        out[i, 6] = -2 * Md[1]
        out[i, 7] = 2 * Md[0]
        out[i, 8] = np.dot(d, Md)
        out[i, 9] = s
