"""Synthetic scenes of vertical cylinders seen by calibrated cameras.

Cylinders are parallel to the world y-axis, so the rectified plane is the
world ``y = 0`` plane with coordinates ``(x, z)`` and ``R_align`` is the
identity. Cameras are placed uniformly in a square of half-width
``camera_box`` around the origin, outside the central square of half-width
``exclusion``, and aimed at the first cylinder's axis with world y up.

Noise perturbs the offset of each rectified line (unit normal, ``n . x + c``)
by a zero-mean Gaussian; with focal length 500 a sigma of 0.02 is roughly
10 pixels at unit depth. An image line fixes only the normal of its plane
(the plane passes through the camera centre), so an offset shift cannot be
lifted as is. Image lines are instead taken from ``view_lines``: lines
through the camera centre whose tangency defect equals that of the noisy
rectified line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .geometry import (
    Camera,
    Circle2D,
    Cylinder3D,
    ImageLine,
)

MAX_RESAMPLE = 10_000


@dataclass(frozen=True)
class SceneConfig:
    radius_range: tuple[float, float] = (0.5, 2.0)
    camera_box: float = 20.0
    exclusion: float = 3.0
    n_cameras: int = 5
    sigma: float = 0.0
    n_cylinders: int = 1
    seed: int = 0
    center_box: float = 1.0  # half-width of the square cylinder centres are drawn from
    min_gap: float = 0.5  # clearance between cylinder surfaces
    camera_height: float = 1.0  # cameras at y uniform in [-h, h]
    arc_deg: float | None = None  # cameras on an arc of this span instead of the box
    arc_distance: float = 15.0

    def __post_init__(self):
        lo, hi = self.radius_range
        if not 0 < lo <= hi:
            raise InvalidConfig(f"radius_range must satisfy 0 < lo <= hi, got {self.radius_range}")
        if not 0 <= self.exclusion < self.camera_box:
            raise InvalidConfig("exclusion square must lie inside the camera box")
        if not self.sigma >= 0:
            raise InvalidConfig("sigma must be non-negative")
        if self.n_cameras < 1 or self.n_cylinders < 1:
            raise InvalidConfig("n_cameras and n_cylinders must be at least 1")
        if self.center_box < 0 or self.min_gap < 0 or self.camera_height < 0:
            raise InvalidConfig("center_box, min_gap and camera_height must be non-negative")
        if self.arc_deg is not None and not 0 < self.arc_deg <= 360:
            raise InvalidConfig("arc_deg must be in (0, 360]")


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    cameras: list[Camera]
    cylinders: list[Cylinder3D]
    circles: list[Circle2D]
    clean_lines: np.ndarray  # (n, 3) rectified, unit normals
    lines: np.ndarray  # (n, 3) rectified after noise
    view_lines: np.ndarray  # (n, 3) through the camera centres, same defects as ``lines``
    labels: np.ndarray  # cylinder index per line
    camera_index: np.ndarray  # camera index per line
    R_align: np.ndarray

    @property
    def camera_dict(self) -> dict:
        return {cam.id: cam for cam in self.cameras}

    def image_lines(self, labelled: bool = True) -> list[ImageLine]:
        """Noisy lines lifted to the cameras' images."""
        out = []
        for row, lab, ci in zip(self.view_lines, self.labels, self.camera_index):
            cam = self.cameras[int(ci)]
            plane = np.array([row[0], 0.0, row[1]])
            out.append(ImageLine(cam.R @ plane, cam.id, int(lab) if labelled else None))
        return out


def tangent_lines(point, circle: Circle2D) -> np.ndarray:
    """The two lines through ``point`` tangent to ``circle`` (unit normals).

    Both have the circle centre at signed distance ``+r``; the first is the
    one whose normal is rotated counter-clockwise from the centre direction.
    """
    p = np.asarray(point, dtype=float)
    d = circle.center - p
    D = math.hypot(d[0], d[1])
    if not D > circle.r:
        raise ValueError("point is not outside the circle")
    base = math.atan2(d[1], d[0])
    alpha = math.acos(circle.r / D)
    out = np.empty((2, 3))
    for k, a in enumerate((base + alpha, base - alpha)):
        n = np.array([math.cos(a), math.sin(a)])
        out[k] = (n[0], n[1], -(n @ p))
    return out


def _through_point(p, circle: Circle2D, dist: float, side: int) -> np.ndarray:
    """Line through ``p`` with the circle centre at signed distance ``dist``."""
    d = circle.center - p
    D = math.hypot(d[0], d[1])
    base = math.atan2(d[1], d[0])
    alpha = math.acos(np.clip(dist / D, -1.0, 1.0))
    a = base + alpha if side == 0 else base - alpha
    n = np.array([math.cos(a), math.sin(a)])
    return np.array([n[0], n[1], -(n @ p)])


def add_line_noise(line, sigma: float, rng) -> np.ndarray:
    """Shift the offset of a unit-normal line by ``N(0, sigma)``."""
    line = np.array(line, dtype=float)
    if sigma > 0:
        line[2] += rng.normal(0.0, sigma)
    return line


def _sample_circles(cfg: SceneConfig, rng) -> list[Circle2D]:
    circles = []
    lo, hi = cfg.radius_range
    for _ in range(MAX_RESAMPLE):
        if len(circles) == cfg.n_cylinders:
            return circles
        c = rng.uniform(-cfg.center_box, cfg.center_box, 2)
        r = rng.uniform(lo, hi)
        if all(math.hypot(*(c - o.center)) > r + o.r + cfg.min_gap for o in circles):
            circles.append(Circle2D(c[0], c[1], r))
    raise InvalidConfig(f"could not place {cfg.n_cylinders} disjoint cylinders in the centre box")


def _sample_camera_xy(cfg: SceneConfig, circles, rng) -> np.ndarray:
    for _ in range(MAX_RESAMPLE):
        if cfg.arc_deg is not None:
            a = math.radians(rng.uniform(-cfg.arc_deg / 2, cfg.arc_deg / 2))
            p = circles[0].center + cfg.arc_distance * np.array([math.cos(a), math.sin(a)])
        else:
            p = rng.uniform(-cfg.camera_box, cfg.camera_box, 2)
            if max(abs(p[0]), abs(p[1])) < cfg.exclusion:
                continue
        # a camera inside (or on) a cylinder sees no tangents
        if all(math.hypot(*(p - c.center)) > c.r * (1 + 1e-9) for c in circles):
            return p
    raise InvalidConfig("could not place a camera outside every cylinder")


def generate_scene(cfg: SceneConfig, rng=None) -> SyntheticScene:
    """Random scene per ``cfg``; ``rng`` defaults to ``default_rng(cfg.seed)``."""
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    circles = _sample_circles(cfg, rng)
    cameras, clean, labels, cam_index, sides, centres = [], [], [], [], [], []
    target = circles[0]
    for i in range(cfg.n_cameras):
        xy = _sample_camera_xy(cfg, circles, rng)
        y = rng.uniform(-cfg.camera_height, cfg.camera_height)
        cam = Camera.look_at([xy[0], y, xy[1]], [target.tx, y, target.ty], id=i)
        cameras.append(cam)
        centres.append(xy)
        for k, c in enumerate(circles):
            for side, row in enumerate(tangent_lines(xy, c)):
                clean.append(row)
                labels.append(k)
                cam_index.append(i)
                sides.append(side)
    clean = np.array(clean)
    noisy = np.array([add_line_noise(row, cfg.sigma, rng) for row in clean])
    view = clean.copy()
    for j in range(len(clean)):
        defect = noisy[j, 2] - clean[j, 2]
        if defect != 0:
            c = circles[labels[j]]
            view[j] = _through_point(centres[cam_index[j]], c, c.r + defect, sides[j])
    cylinders = [Cylinder3D.from_axis([0.0, 1.0, 0.0], [c.tx, 0.0, c.ty], c.r) for c in circles]
    return SyntheticScene(
        cameras=cameras,
        cylinders=cylinders,
        circles=circles,
        clean_lines=clean,
        lines=noisy,
        view_lines=view,
        labels=np.array(labels, dtype=np.int64),
        camera_index=np.array(cam_index, dtype=np.int64),
        R_align=np.eye(3),
    )


@dataclass(frozen=True)
class ErrorMetrics:
    center_error: float
    radius_error: float
    direction_angle: float | None = None  # only for cylinders

    @property
    def total(self) -> float:
        return self.center_error + self.radius_error


def _axis_distance(a: Cylinder3D, b: Cylinder3D) -> float:
    d = b.p - a.p
    n = np.cross(a.w, b.w)
    s = np.linalg.norm(n)
    if s < 1e-12:
        # parallel: distance from b's point to a's axis
        return float(np.linalg.norm(d - (d @ a.w) * a.w))
    return float(abs(d @ n) / s)


def eval_error(estimate: Circle2D | Cylinder3D, truth: Circle2D | Cylinder3D) -> ErrorMetrics:
    if isinstance(estimate, Circle2D) and isinstance(truth, Circle2D):
        return ErrorMetrics(
            math.hypot(estimate.tx - truth.tx, estimate.ty - truth.ty), abs(estimate.r - truth.r)
        )
    if isinstance(estimate, Cylinder3D) and isinstance(truth, Cylinder3D):
        angle = math.atan2(np.linalg.norm(np.cross(estimate.w, truth.w)), abs(estimate.w @ truth.w))
        return ErrorMetrics(_axis_distance(estimate, truth), abs(estimate.r - truth.r), float(angle))
    raise TypeError("estimate and truth must both be Circle2D or both Cylinder3D")


def _gauge(d: np.ndarray) -> np.ndarray:
    if abs(d[5]) < 1e-12:
        return d / np.linalg.norm(d)
    return d / -d[5]


def frobenius_conic_error(d_est, d_gt) -> float:
    """Frobenius norm between full symmetric 3x3 matrices in the ``d6 = -1`` gauge."""
    a = _gauge(np.asarray(getattr(d_est, "d", d_est), dtype=float))
    b = _gauge(np.asarray(getattr(d_gt, "d", d_gt), dtype=float))
    diff = a - b
    weights = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])  # off-diagonals appear twice
    return float(math.sqrt(np.sum(weights * diff * diff)))



def to_scene_file(scene: SyntheticScene, rotation=None, label_mode: str = "all", ref_image=0, metadata=None):
    """Package a synthetic scene as a :class:`~cyltri.io.SceneFile`.

    ``rotation`` maps world coordinates to new ones (cameras follow, image
    lines are unchanged). ``label_mode`` keeps cylinder labels on ``"all"``
    lines, only on the ``"ref"`` image's lines, or on ``"none"``.
    """
    from .io import SceneFile

    if label_mode not in ("all", "ref", "none"):
        raise InvalidConfig(f"unknown label_mode {label_mode!r}")
    R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    cameras = [Camera(np.column_stack([cam.R @ R.T, cam.t]), cam.id) for cam in scene.cameras]
    lines = []
    for ln in scene.image_lines():
        keep = label_mode == "all" or (label_mode == "ref" and ln.camera_id == ref_image)
        lines.append(ImageLine(ln.l, ln.camera_id, ln.label if keep else None))
    return SceneFile.from_objects(cameras, lines, metadata)
