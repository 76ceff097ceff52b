"""Cylinder axis direction from silhouette lines.

Each line ``l`` seen by camera ``[R | t]`` contains the axis direction, so
``l^T R w = 0``. Rows ``l^T R`` are scaled to unit length; the residual of a
row against a unit ``w`` is then the sine of the angle between ``w`` and the
line's tangent plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidConfig, InvalidInput, NoConsensus, RankDeficient
from .geometry import Camera, ImageLine, canonical_direction

RANK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DirectionEstimate:
    w: np.ndarray
    inlier_ids: tuple
    singular_values: np.ndarray


@dataclass(frozen=True)
class DirectionConfig:
    method: str = "least_squares"  # or "ransac"
    ransac_iterations: int = 200
    inlier_threshold: float = 1e-3  # radians
    sample_size: int = 2
    shared_direction: bool = False

    def __post_init__(self):
        if self.method not in ("least_squares", "ransac"):
            raise InvalidConfig(f"unknown direction method {self.method!r}")
        if self.inlier_threshold <= 0 or self.ransac_iterations < 1:
            raise InvalidConfig("inlier_threshold must be > 0 and ransac_iterations >= 1")
        if self.sample_size < 2:
            raise InvalidConfig("sample_size must be at least 2")


def constraint_rows(lines: Sequence[ImageLine], cameras: dict) -> np.ndarray:
    """Unit rows ``l_i^T R_i`` (n x 3)."""
    rows = np.array([line.l @ cameras[line.camera_id].R for line in lines], dtype=float)
    rows = rows.reshape(-1, 3)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _nullvector(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(rows) < 2:
        raise RankDeficient("at least two lines are needed for a direction")
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    s = np.pad(s, (0, 3 - len(s)))
    if s[1] <= RANK_TOL * s[0]:
        raise RankDeficient(f"direction constraints have rank < 2 (s = {s})")
    return canonical_direction(vt[2]), s


def estimate_direction_lsq(
    lines: Sequence[ImageLine], cameras: dict, ids: Sequence | None = None
) -> DirectionEstimate:
    rows = constraint_rows(lines, cameras)
    w, s = _nullvector(rows)
    ids = tuple(range(len(lines))) if ids is None else tuple(ids)
    return DirectionEstimate(w, ids, s)


def angular_residuals(rows: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.abs(np.arcsin(np.clip(rows @ w, -1.0, 1.0)))


def estimate_direction_ransac(
    lines: Sequence[ImageLine],
    cameras: dict,
    cfg: DirectionConfig = DirectionConfig(method="ransac"),
    rng: np.random.Generator | int | None = 0,
) -> DirectionEstimate:
    """Consensus direction over random ``cfg.sample_size``-line samples."""
    rng = np.random.default_rng(rng)
    n = len(lines)
    if n < cfg.sample_size:
        raise InvalidInput(f"need at least {cfg.sample_size} lines, got {n}")
    rows = constraint_rows(lines, cameras)

    best_count, best_mask = -1, None
    for _ in range(cfg.ransac_iterations):
        sample = rng.choice(n, size=cfg.sample_size, replace=False)
        try:
            w, _ = _nullvector(rows[sample])
        except RankDeficient:
            continue
        mask = angular_residuals(rows, w) <= cfg.inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask = count, mask

    if best_mask is None or best_count < cfg.sample_size + 1:
        raise NoConsensus(f"best direction consensus {max(best_count, 0)} < {cfg.sample_size + 1}")
    inliers = np.flatnonzero(best_mask)
    w, s = _nullvector(rows[inliers])
    return DirectionEstimate(w, tuple(int(i) for i in inliers), s)


def estimate_direction(
    lines: Sequence[ImageLine], cameras: dict, cfg: DirectionConfig, rng=0
) -> DirectionEstimate:
    if cfg.method == "ransac":
        return estimate_direction_ransac(lines, cameras, cfg, rng)
    return estimate_direction_lsq(lines, cameras)
