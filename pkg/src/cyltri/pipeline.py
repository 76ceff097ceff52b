"""End-to-end triangulation of cylinders from a scene file.

Steps: axis direction from all lines, rotation of the axis onto y,
backprojection of every line into the rectified plane, cross-section
estimate, lift back to 3D. There is no iterative refinement afterwards.

Failures are re-raised as :class:`TriangulationError` with ``stage`` set to
``"direction"`` (direction estimate and rectification) or
``"cross-section"``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .direction import DirectionConfig, estimate_direction
from .errors import EstimationError, InvalidConfig, InvalidInput, NoConsensus, TriangulationError
from .geometry import Circle2D, geometric_residuals, lift_circle_to_cylinder, rectify
from .io import CylinderResult, ResultFile, SceneFile
from .robust import RansacConfig, exhaustive_multi_cylinder, ransac_circle
from .solvers import circle_from_linear_conic, solve_constrained_lsq, solve_linear_conic

DIRECTION_METHODS = ("lsq", "ransac")
CROSS_SECTION_METHODS = ("constrained-lsq", "minimal-ransac", "linear")


@dataclass(frozen=True)
class PipelineConfig:
    direction: str = "lsq"
    cross_section: str = "constrained-lsq"
    threshold: float = 0.01  # cross-section inlier threshold, scene units
    iterations: int = 500
    seed: int = 0
    direction_threshold: float = 1e-3  # radians, for direction RANSAC
    rectify_tol: float = 1e-3  # max |sin| between a tangent plane and the axis
    min_inliers: int = 3

    def __post_init__(self):
        if self.direction not in DIRECTION_METHODS:
            raise InvalidConfig(f"direction must be one of {DIRECTION_METHODS}, got {self.direction!r}")
        if self.cross_section not in CROSS_SECTION_METHODS:
            raise InvalidConfig(f"cross_section must be one of {CROSS_SECTION_METHODS}, got {self.cross_section!r}")
        if not (self.threshold > 0 and self.direction_threshold > 0 and self.rectify_tol > 0):
            raise InvalidConfig("thresholds must be positive")
        if self.iterations < 1 or self.min_inliers < 1:
            raise InvalidConfig("iterations and min_inliers must be at least 1")

    def echo(self) -> dict:
        return asdict(self)


def _direction_cfg(cfg: PipelineConfig) -> DirectionConfig:
    return DirectionConfig(
        method="ransac" if cfg.direction == "ransac" else "least_squares",
        ransac_iterations=cfg.iterations,
        inlier_threshold=cfg.direction_threshold,
    )


def _cross_section(L: np.ndarray, cfg: PipelineConfig) -> tuple[Circle2D, np.ndarray, str]:
    """Circle, indices of the lines it was fit to, conic class."""
    if cfg.cross_section == "constrained-lsq":
        circle, _ = solve_constrained_lsq(L)
        return circle, np.arange(len(L)), "circle"
    if cfg.cross_section == "linear":
        circle, cls = circle_from_linear_conic(solve_linear_conic(L))
        return circle, np.arange(len(L)), cls
    exhaustive = math.comb(len(L), 3) <= cfg.iterations
    rc = RansacConfig(cfg.iterations, exhaustive, cfg.threshold, cfg.min_inliers, cfg.seed)
    circle, inliers = ransac_circle(L, rc)
    return circle, np.array(inliers, dtype=np.int64), "circle"


def _residual_fields(L, circle, focal):
    defects = np.abs(geometric_residuals(L, circle))
    mx, mean = float(defects.max()), float(defects.mean())
    if focal is None:
        return mx, mean, None, None
    return mx, mean, mx * focal, mean * focal


def triangulate_lines(scene: SceneFile, line_ids, cfg: PipelineConfig, group=None) -> CylinderResult:
    """Triangulate one cylinder from the scene lines ``line_ids``."""
    cameras = scene.camera_dict()
    all_lines = scene.image_lines(labelled=False)
    lines = [all_lines[i] for i in line_ids]
    try:
        est = estimate_direction(lines, cameras, _direction_cfg(cfg), cfg.seed)
        keep = list(est.inlier_ids)
        problem, _ = rectify([lines[i] for i in keep], cameras, est.w, tol=cfg.rectify_tol)
    except EstimationError as err:
        raise TriangulationError("direction", err) from err
    try:
        circle, fit_ids, cls = _cross_section(problem.lines2d, cfg)
    except EstimationError as err:
        raise TriangulationError("cross-section", err) from err
    cyl = lift_circle_to_cylinder(circle, problem.R_align)
    mx, mean, mx_px, mean_px = _residual_fields(problem.lines2d[fit_ids], circle, scene.focal_length)
    used = [line_ids[keep[problem.source_index[k]]] for k in fit_ids]
    return CylinderResult(
        direction=tuple(float(x) for x in cyl.w),
        axis_point=tuple(float(x) for x in cyl.p),
        radius=float(cyl.r),
        inliers=tuple((scene.lines[i].camera_id, int(i)) for i in used),
        max_defect=mx,
        mean_defect=mean,
        method=cfg.cross_section,
        config=cfg.echo(),
        max_defect_px=mx_px,
        mean_defect_px=mean_px,
        conic_class=cls,
        group=group,
    )


def triangulate_cylinder(scene: SceneFile, cfg: PipelineConfig = PipelineConfig()) -> ResultFile:
    """All lines of the scene as one cylinder."""
    return ResultFile((triangulate_lines(scene, list(range(len(scene.lines))), cfg),))


def triangulate_groups(scene: SceneFile, cfg: PipelineConfig = PipelineConfig()) -> ResultFile:
    """One cylinder per line group label, in order of first appearance."""
    groups: dict = {}
    for i, ln in enumerate(scene.lines):
        if ln.group is None:
            raise InvalidInput(f"scene.lines[{i}]: group mode needs every line to carry a group label")
        groups.setdefault(ln.group, []).append(i)
    return ResultFile(tuple(triangulate_lines(scene, ids, cfg, group=g) for g, ids in groups.items()))


def match_cylinders(scene: SceneFile, ref_image, cfg: PipelineConfig = PipelineConfig()) -> ResultFile:
    """Unlabelled multi-cylinder matching with a shared axis direction.

    The direction is estimated from all lines (all cylinders are parallel);
    labels are only read in ``ref_image``, where they pair the left and
    right silhouettes.
    """
    cameras = scene.camera_dict()
    if ref_image not in cameras:
        raise InvalidInput(f"reference image {ref_image!r} is not a camera of the scene")
    lines = [
        ln if ln.camera_id == ref_image else type(ln)(ln.l, ln.camera_id) for ln in scene.image_lines()
    ]
    try:
        est = estimate_direction(lines, cameras, _direction_cfg(cfg), cfg.seed)
    except EstimationError as err:
        raise TriangulationError("direction", err) from err
    rc = RansacConfig(cfg.iterations, True, cfg.threshold, cfg.min_inliers, cfg.seed)
    try:
        results = exhaustive_multi_cylinder(lines, cameras, ref_image, est.w, rc, direction_tol=cfg.rectify_tol)
    except EstimationError as err:
        raise TriangulationError("cross-section", err) from err
    if not results:
        raise TriangulationError("cross-section", NoConsensus("no reference pair reached consensus"))
    problem, _ = rectify(lines, cameras, est.w, tol=cfg.rectify_tol, skip_inconsistent=True)
    row_of = {s: k for k, s in enumerate(problem.source_index)}
    out = []
    for res in results:
        ids = [i for _, i in res.matched_lines]
        L = problem.lines2d[[row_of[i] for i in ids]]
        mx, mean, mx_px, mean_px = _residual_fields(L, res.circle, scene.focal_length)
        out.append(
            CylinderResult(
                direction=tuple(float(x) for x in res.cylinder.w),
                axis_point=tuple(float(x) for x in res.cylinder.p),
                radius=float(res.cylinder.r),
                inliers=tuple(res.matched_lines),
                max_defect=mx,
                mean_defect=mean,
                method="exhaustive-match",
                config={**cfg.echo(), "ref_image": ref_image},
                max_defect_px=mx_px,
                mean_defect_px=mean_px,
                conic_class="circle",
            )
        )
    return ResultFile(tuple(out))
