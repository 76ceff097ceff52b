"""Cameras, silhouette lines, rectification and circle/dual-conic algebra.

A cylinder with unit axis ``w`` is stored as the rotation ``R_align`` that
sends ``w`` to the y-axis together with the dual conic of its cross-section
in the rectified ``y = 0`` plane. Coordinates in that plane are ``(x, z)``;
circle centres are written ``(tx, ty)`` with ``ty`` the world ``z`` value.

Dual conics are packed as six numbers ``d1..d6``::

    | d1 d2 d3 |
    | d2 d4 d5 |
    | d3 d5 d6 |
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import (
    DegenerateConic,
    DirectionInconsistent,
    ImaginaryRadius,
    InvalidInput,
)

Y_AXIS = np.array([0.0, 1.0, 0.0])

ROTATION_TOL = 1e-9
DEFAULT_DIRECTION_TOL = 1e-6


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Camera:
    """Calibrated camera ``P = [R | t]``."""

    P: np.ndarray
    id: Hashable = 0

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.shape != (3, 4):
            raise InvalidInput(f"camera {self.id!r}: P must be 3x4, got {P.shape}")
        if not np.all(np.isfinite(P)):
            raise InvalidInput(f"camera {self.id!r}: non-finite entries")
        R = P[:, :3]
        if np.abs(R.T @ R - np.eye(3)).max() > ROTATION_TOL or abs(np.linalg.det(R) - 1.0) > ROTATION_TOL:
            raise InvalidInput(f"camera {self.id!r}: left 3x3 block is not a rotation")
        object.__setattr__(self, "P", _frozen(P))

    @property
    def R(self) -> np.ndarray:
        return self.P[:, :3]

    @property
    def t(self) -> np.ndarray:
        return self.P[:, 3]

    @property
    def center(self) -> np.ndarray:
        return -self.R.T @ self.t

    @classmethod
    def look_at(cls, center, target, up=Y_AXIS, id: Hashable = 0) -> "Camera":
        """Camera at ``center`` whose optical axis (+z) points at ``target``."""
        center = np.asarray(center, dtype=float)
        forward = np.asarray(target, dtype=float) - center
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, up)
        nr = np.linalg.norm(right)
        if nr < 1e-12:
            raise InvalidInput("look_at: up vector parallel to viewing direction")
        right /= nr
        down = np.cross(forward, right)
        R = np.vstack([right, down, forward])
        return cls(np.hstack([R, (-R @ center)[:, None]]), id=id)


def normalize_line(l) -> np.ndarray:
    """Scale a homogeneous 2D line to unit normal, or unit norm at infinity."""
    l = np.asarray(l, dtype=float)
    n = np.hypot(l[0], l[1])
    if n > 0:
        return l / n
    s = np.linalg.norm(l)
    if s == 0:
        raise InvalidInput("zero line vector")
    return l / s


@dataclass(frozen=True, eq=False)
class ImageLine:
    """Silhouette line observed by a camera; ``label`` is only for evaluation."""

    l: np.ndarray
    camera_id: Hashable
    label: Hashable | None = None

    def __post_init__(self):
        object.__setattr__(self, "l", _frozen(normalize_line(self.l)))

    @property
    def at_infinity(self) -> bool:
        return bool(np.hypot(self.l[0], self.l[1]) == 0)


@dataclass(frozen=True, eq=False)
class DualConic2D:
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(6)
        if not np.any(d):
            raise InvalidInput("dual conic with all-zero coefficients")
        object.__setattr__(self, "d", _frozen(d))

    @property
    def matrix(self) -> np.ndarray:
        return conic_matrix(self.d)

    @classmethod
    def from_matrix(cls, m) -> "DualConic2D":
        m = np.asarray(m, dtype=float)
        return cls([m[0, 0], m[0, 1], m[0, 2], m[1, 1], m[1, 2], m[2, 2]])

    def is_on_manifold(self, eps: float = 1e-8) -> bool:
        d = self.d
        tol = eps * float(d @ d)
        c1 = d[2] * d[4] - d[1] * d[5]
        c2 = d[4] ** 2 - d[2] ** 2 + d[0] * d[5] - d[3] * d[5]
        return abs(c1) <= tol and abs(c2) <= tol


@dataclass(frozen=True)
class Circle2D:
    """Circle in the rectified plane."""

    tx: float
    ty: float
    r: float

    def __post_init__(self):
        tx, ty, r = self.tx, self.ty, self.r
        if not (type(tx) is float and type(ty) is float and type(r) is float):
            tx, ty, r = float(tx), float(ty), float(r)
            object.__setattr__(self, "tx", tx)
            object.__setattr__(self, "ty", ty)
            object.__setattr__(self, "r", r)
        if not (math.isfinite(tx) and math.isfinite(ty) and math.isfinite(r)):
            raise InvalidInput(f"non-finite circle {(tx, ty, r)}")
        if r <= 0:
            raise InvalidInput(f"circle radius must be positive, got {r}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    def as_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.r])


def canonical_direction(w) -> np.ndarray:
    """Unit vector with its largest-magnitude component made positive."""
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    k = int(np.argmax(np.abs(w)))  # argmax returns the first index on ties
    return -w if w[k] < 0 else w


@dataclass(frozen=True, eq=False)
class Cylinder3D:
    """Infinite cylinder: unit axis ``w``, axis point ``p`` with ``p . w = 0``."""

    w: np.ndarray
    p: np.ndarray
    r: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise InvalidInput("cylinder axis must be a unit vector")
        if abs(p @ w) > 1e-9 * max(np.linalg.norm(p), 1.0):
            raise InvalidInput("cylinder axis point must satisfy p . w = 0")
        if not self.r > 0:
            raise InvalidInput("cylinder radius must be positive")
        object.__setattr__(self, "w", _frozen(w))
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "r", float(self.r))

    @classmethod
    def from_axis(cls, direction, point, r: float) -> "Cylinder3D":
        w = canonical_direction(direction)
        point = np.asarray(point, dtype=float)
        return cls(w, point - (point @ w) * w, r)


@dataclass(frozen=True, eq=False)
class DualQuadricCylinder:
    """Cylinder envelope kept as ``(R_align, cross-section dual conic)``."""

    R_align: np.ndarray
    conic: DualConic2D

    @property
    def w(self) -> np.ndarray:
        return self.R_align.T @ Y_AXIS

    @property
    def apex(self) -> np.ndarray:
        return np.append(self.w, 0.0)

    def envelope(self) -> np.ndarray:
        """Dense rank-3 4x4 envelope ``D`` in world coordinates."""
        d1, d2, d3, d4, d5, d6 = self.conic.d
        Dr = np.array(
            [[d1, 0, d2, d3], [0, 0, 0, 0], [d2, 0, d4, d5], [d3, 0, d5, d6]], dtype=float
        )
        H = np.eye(4)
        H[:3, :3] = self.R_align
        return H.T @ Dr @ H


@dataclass(frozen=True, eq=False)
class RectifiedProblem:
    """Lines backprojected into the plane orthogonal to the estimated axis."""

    R_align: np.ndarray
    lines2d: np.ndarray  # (n, 3), unit normals
    camera_ids: tuple = field(default_factory=tuple)
    source_index: tuple = field(default_factory=tuple)  # index into the input line list


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def project_dual_quadric(camera: Camera | np.ndarray, D) -> np.ndarray:
    P = camera.P if isinstance(camera, Camera) else np.asarray(camera, dtype=float)
    return P @ np.asarray(D, dtype=float) @ P.T


def tangent_plane(l, camera: Camera) -> np.ndarray:
    """Plane through the camera centre that projects to image line ``l``."""
    return camera.P.T @ np.asarray(l, dtype=float)


def direction_residual(l, camera: Camera, w) -> float:
    return float(np.asarray(l, dtype=float) @ camera.R @ np.asarray(w, dtype=float))


def rotation_to_y_axis(w) -> np.ndarray:
    """Rotation taking unit vector ``w`` onto ``(0, 1, 0)``.

    Rodrigues rotation about ``w x e_y``. Near ``+e_y`` the identity is
    returned and near ``-e_y`` the half-turn about the x-axis.
    """
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    k = np.cross(w, Y_AXIS)
    s = np.linalg.norm(k)
    c = float(w @ Y_AXIS)
    if s < 1e-8:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + K + K @ K * ((1 - c) / s**2)


def backproject_line_2d(l, camera: Camera, R_align, tol: float = DEFAULT_DIRECTION_TOL) -> np.ndarray:
    """Intersect the tangent plane of ``l`` with the rectified ``y = 0`` plane.

    Raises DirectionInconsistent when the plane's y-component exceeds
    ``tol * |plane|``, i.e. the plane does not contain the axis.
    """
    l = np.asarray(l, dtype=float)
    R_align = np.asarray(R_align, dtype=float)
    # camera in the rotated world: [R R_align^T | t]
    normal = R_align @ (camera.R.T @ l)
    offset = camera.t @ l
    plane = np.array([normal[0], normal[1], normal[2], offset])
    if abs(plane[1]) > tol * np.linalg.norm(plane):
        raise DirectionInconsistent(
            f"line on camera {camera.id!r} has |pi_2| / |pi| = {abs(plane[1]) / np.linalg.norm(plane):.3g} > {tol:g}"
        )
    r = plane[[0, 2, 3]]
    n = np.hypot(r[0], r[1])
    if n == 0:
        raise DirectionInconsistent("tangent plane is orthogonal to the axis")
    return r / n


def rectify(
    lines: Sequence[ImageLine],
    cameras: dict,
    w,
    tol: float = DEFAULT_DIRECTION_TOL,
    skip_inconsistent: bool = False,
) -> tuple[RectifiedProblem, list[int]]:
    """Backproject every line into the rectified plane of axis ``w``.

    Returns the problem and the indices of lines rejected as inconsistent
    with ``w`` (only when ``skip_inconsistent``; otherwise the error
    propagates).
    """
    R_align = rotation_to_y_axis(w)
    rows, ids, src, rejected = [], [], [], []
    for i, line in enumerate(lines):
        try:
            r = backproject_line_2d(line.l, cameras[line.camera_id], R_align, tol)
        except DirectionInconsistent:
            if not skip_inconsistent:
                raise
            rejected.append(i)
            continue
        rows.append(r)
        ids.append(line.camera_id)
        src.append(i)
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return RectifiedProblem(R_align, arr, tuple(ids), tuple(src)), rejected


def conic_matrix(d) -> np.ndarray:
    d1, d2, d3, d4, d5, d6 = d
    return np.array([[d1, d2, d3], [d2, d4, d5], [d3, d5, d6]], dtype=float)


def dual_conic_from_circle(c: Circle2D) -> DualConic2D:
    tx, ty, r = c.tx, c.ty, c.r
    return DualConic2D([r * r - tx * tx, -tx * ty, -tx, r * r - ty * ty, -ty, -1.0])


def circle_params_from_dual_conic(d) -> tuple[float, float, float]:
    """``(tx, ty, r^2)`` read off a dual conic in the ``d6 = -1`` gauge."""
    d = np.asarray(d, dtype=float)
    if abs(d[5]) <= 1e-12 * np.linalg.norm(d):
        raise DegenerateConic("d6 vanishes: circle centre at infinity")
    d = d / -d[5]
    return -d[2], -d[4], d[0] + d[2] ** 2


def circle_from_dual_conic(conic: DualConic2D | np.ndarray) -> Circle2D:
    d = conic.d if isinstance(conic, DualConic2D) else conic
    tx, ty, r2 = circle_params_from_dual_conic(d)
    if not r2 > 0:
        raise ImaginaryRadius(f"r^2 = {r2:.6g} is not positive")
    return Circle2D(tx, ty, np.sqrt(r2))


def manifold_residuals(conic: DualConic2D | np.ndarray) -> tuple[float, float]:
    d = conic.d if isinstance(conic, DualConic2D) else np.asarray(conic, dtype=float)
    d = d / np.linalg.norm(d)
    c1 = d[2] * d[4] - d[1] * d[5]
    c2 = d[4] ** 2 - d[2] ** 2 + d[0] * d[5] - d[3] * d[5]
    return float(c1), float(c2)


def geometric_line_residual(line, c: Circle2D) -> float:
    """Signed tangency defect ``|distance(centre, line)| - r``."""
    l1, l2, l3 = line
    return abs(l1 * c.tx + l2 * c.ty + l3) - c.r


def geometric_residuals(lines: np.ndarray, c: Circle2D) -> np.ndarray:
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    return np.abs(lines[:, 0] * c.tx + lines[:, 1] * c.ty + lines[:, 2]) - c.r


def tangency_rows(lines: np.ndarray) -> np.ndarray:
    """Rows ``a`` with ``a . d = r^T d r`` for each line ``r``."""
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    a, b, c = lines[:, 0], lines[:, 1], lines[:, 2]
    return np.column_stack([a * a, 2 * a * b, 2 * a * c, b * b, 2 * b * c, c * c])


def algebraic_residual(line, conic: DualConic2D | np.ndarray) -> float:
    d = conic.d if isinstance(conic, DualConic2D) else conic
    r = np.asarray(line, dtype=float)
    return float(r @ conic_matrix(d) @ r)


def lift_circle_to_cylinder(c: Circle2D, R_align) -> Cylinder3D:
    R_align = np.asarray(R_align, dtype=float)
    w = R_align.T @ Y_AXIS
    point = R_align.T @ np.array([c.tx, 0.0, c.ty])
    return Cylinder3D.from_axis(w, point, c.r)


def cylinder_to_circle(cyl: Cylinder3D, R_align) -> Circle2D:
    """Cross-section of ``cyl`` in the rectified frame of ``R_align``."""
    q = np.asarray(R_align, dtype=float) @ cyl.p
    return Circle2D(q[0], q[2], cyl.r)
