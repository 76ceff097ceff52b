"""Consensus estimation of circular cross-sections.

:func:`ransac_circle` fits one circle to rectified lines with outliers.
:func:`exhaustive_multi_cylinder` matches silhouettes of several parallel
cylinders across images: every known left/right pair in a reference image
is combined with every single line from the other images, and each
resulting three-line hypothesis is scored against all lines.

Inliers are lines whose tangency defect ``| |n . t + c| - r |`` is within
the threshold. Ties in consensus go to the lowest hypothesis index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from . import _kernels
from .errors import EstimationError, InvalidConfig, InvalidInput, NoConsensus
from .geometry import Circle2D, Cylinder3D, ImageLine, lift_circle_to_cylinder, rectify
from .solvers import _REGAUGE, _as_lines, solve_constrained_lsq


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 500
    exhaustive: bool = False
    inlier_threshold: float = 0.01
    min_inliers: int = 3
    seed: int = 0

    def __post_init__(self):
        if not self.inlier_threshold > 0:
            raise InvalidConfig("inlier_threshold must be positive")
        if self.iterations < 1:
            raise InvalidConfig("iterations must be at least 1")
        if self.min_inliers < 1:
            raise InvalidConfig("min_inliers must be at least 1")


@dataclass(frozen=True, eq=False)
class MatchResult:
    cylinder: Cylinder3D
    circle: Circle2D
    matched_lines: tuple  # (camera id, index into the input line list)
    inlier_rate: float
    outlier_rate: float


class MatchResults(list):
    """List of :class:`MatchResult` with bookkeeping from the search."""

    def __init__(self, results=(), skipped_pairs=(), n_hypotheses: int = 0, excluded_lines=()):
        super().__init__(results)
        self.skipped_pairs = list(skipped_pairs)  # (pair, reason)
        self.n_hypotheses = n_hypotheses
        self.excluded_lines = tuple(excluded_lines)  # DirectionInconsistent


def _defects(lines: np.ndarray, circles: np.ndarray) -> np.ndarray:
    """|tangency defect| of every line against every circle, shape (m, n)."""
    dist = circles[:, :2] @ lines[:, :2].T + lines[:, 2]
    return np.abs(np.abs(dist) - circles[:, 2:3])


def _hypotheses(lines: np.ndarray, triples: np.ndarray, tol: float = 1e-8):
    triples = np.ascontiguousarray(triples, dtype=np.int64).reshape(-1, 3)
    circles = np.empty((4 * len(triples), 3))
    hyp = np.empty(4 * len(triples), dtype=np.int64)
    m = _kernels.minimal_batch(lines, triples, _REGAUGE, tol, circles, hyp)
    return circles[:m], hyp[:m]


def _best(lines, circles, threshold):
    """Index of the max-consensus circle (first on ties) and its inlier mask."""
    if len(circles) == 0:
        return None, np.zeros(len(lines), dtype=bool)
    counts = np.zeros(len(circles), dtype=np.int64)
    for start in range(0, len(circles), 4096):
        block = circles[start : start + 4096]
        counts[start : start + 4096] = (_defects(lines, block) <= threshold).sum(axis=1)
    k = int(np.argmax(counts))
    return k, _defects(lines, circles[k : k + 1])[0] <= threshold


def _refine(lines, circle: Circle2D, mask, threshold):
    """Constrained LSQ on the inliers; kept only if consensus does not drop."""
    if mask.sum() < 4:
        return circle, mask
    try:
        refined, _ = solve_constrained_lsq(lines[mask])
    except EstimationError:
        return circle, mask
    new_mask = _defects(lines, refined.as_array()[None])[0] <= threshold
    if new_mask.sum() < mask.sum():
        return circle, mask
    return refined, new_mask


def ransac_circle(lines2d, cfg: RansacConfig = RansacConfig()) -> tuple[Circle2D, tuple[int, ...]]:
    """Consensus circle over three-line samples, refined on its inliers.

    Samples are all ``C(n, 3)`` triples in lexicographic order when
    ``cfg.exhaustive``, otherwise ``cfg.iterations`` random triples drawn
    with ``cfg.seed``.
    """
    L = np.ascontiguousarray(_as_lines(lines2d))
    n = len(L)
    if n < 3:
        raise InvalidInput(f"RANSAC needs at least 3 lines, got {n}")
    if cfg.exhaustive:
        triples = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    else:
        rng = np.random.default_rng(cfg.seed)
        triples = np.array([rng.choice(n, 3, replace=False) for _ in range(cfg.iterations)])
    circles, _ = _hypotheses(L, triples)
    k, mask = _best(L, circles, cfg.inlier_threshold)
    if k is None or mask.sum() < cfg.min_inliers:
        raise NoConsensus(f"best consensus {int(mask.sum())} < min_inliers {cfg.min_inliers}")
    circle, mask = _refine(L, Circle2D(*circles[k]), mask, cfg.inlier_threshold)
    return circle, tuple(int(i) for i in np.flatnonzero(mask))


def reference_pairs(lines: Sequence[ImageLine], ref_image: Hashable) -> list[tuple[int, int]]:
    """Left/right pairs in ``ref_image`` from line labels (indices into ``lines``)."""
    groups: dict = {}
    for i, line in enumerate(lines):
        if line.camera_id == ref_image and line.label is not None:
            groups.setdefault(line.label, []).append(i)
    pairs = []
    for label, idx in groups.items():
        if len(idx) != 2:
            raise InvalidInput(f"reference group {label!r} has {len(idx)} lines, expected 2")
        pairs.append((idx[0], idx[1]))
    if not pairs:
        raise InvalidInput(f"no labelled silhouette pairs in reference image {ref_image!r}")
    return pairs


def exhaustive_multi_cylinder(
    lines: Sequence[ImageLine],
    cameras: dict,
    ref_image: Hashable,
    w,
    cfg: RansacConfig = RansacConfig(),
    ref_pairs: Sequence[tuple[int, int]] | None = None,
    direction_tol: float = 1e-3,
) -> MatchResults:
    """Match silhouettes of parallel cylinders with axis ``w`` across images.

    ``ref_pairs`` index into ``lines``; by default they come from the labels
    of the reference image's lines (see :func:`reference_pairs`). Labels of
    other lines are ignored. Lines whose tangent plane misses ``w`` by more
    than ``direction_tol`` are excluded, not counted as outliers.

    Per pair, ``len(other-image lines)`` hypotheses are tried, so the total
    is linear in the number of lines. Models are accepted greedily by
    decreasing consensus, each needing ``min_inliers`` lines not yet taken;
    a line inside several accepted models is then given to the one with the
    smallest tangency defect, and each model is refit on its own lines.
    """
    if ref_pairs is None:
        ref_pairs = reference_pairs(lines, ref_image)
    problem, excluded = rectify(lines, cameras, w, tol=direction_tol, skip_inconsistent=True)
    L = np.ascontiguousarray(problem.lines2d)
    src = np.array(problem.source_index, dtype=np.int64)
    pos = {int(s): k for k, s in enumerate(src)}
    others = np.array([k for k, cam in enumerate(problem.camera_ids) if cam != ref_image], dtype=np.int64)

    candidates, skipped, n_hyp = [], [], 0
    for pair in ref_pairs:
        if pair[0] not in pos or pair[1] not in pos:
            skipped.append((tuple(pair), "reference line inconsistent with the axis direction"))
            continue
        a, b = pos[pair[0]], pos[pair[1]]
        triples = np.column_stack([np.full(len(others), a), np.full(len(others), b), others])
        n_hyp += len(triples)
        circles, _ = _hypotheses(L, triples)
        k, mask = _best(L, circles, cfg.inlier_threshold)
        if k is None or mask.sum() < cfg.min_inliers:
            skipped.append((tuple(pair), f"NoConsensus: best consensus {int(mask.sum())} < {cfg.min_inliers}"))
            continue
        circle, mask = _refine(L, Circle2D(*circles[k]), mask, cfg.inlier_threshold)
        candidates.append((int(mask.sum()), len(candidates), tuple(pair), circle, mask))

    n = len(L)
    taken = np.zeros(n, dtype=bool)
    accepted = []
    for count, _, pair, circle, mask in sorted(candidates, key=lambda c: (-c[0], c[1])):
        free = mask & ~taken
        if free.sum() < cfg.min_inliers:
            skipped.append((pair, f"pruned: {int(free.sum())} unassigned inliers"))
            continue
        taken |= free
        accepted.append((circle, mask, pair))

    # a line inside several accepted models goes to the one it fits best
    owner = np.full(n, -1)
    if accepted:
        D = _defects(L, np.array([c.as_array() for c, _, _ in accepted]))
        D[~np.array([m for _, m, _ in accepted])] = np.inf
        has = np.isfinite(D).any(axis=0)
        owner[has] = np.argmin(D[:, has], axis=0)
    results = []
    for j, (circle, _, pair) in enumerate(accepted):
        own = owner == j
        if own.sum() < cfg.min_inliers:
            skipped.append((pair, f"pruned: {int(own.sum())} lines fit it best"))
            continue
        if own.sum() >= 4:
            try:
                circle = solve_constrained_lsq(L[own])[0]
            except EstimationError:
                pass
        matched = tuple((lines[int(src[k])].camera_id, int(src[k])) for k in np.flatnonzero(own))
        rate = len(matched) / n
        results.append(
            MatchResult(
                cylinder=lift_circle_to_cylinder(circle, problem.R_align),
                circle=circle,
                matched_lines=matched,
                inlier_rate=rate,
                outlier_rate=1.0 - rate,
            )
        )
    return MatchResults(results, skipped, n_hyp, excluded)


def expected_hypotheses(lines: Sequence[ImageLine], ref_image: Hashable, n_pairs: int) -> int:
    """Hypothesis count of :func:`exhaustive_multi_cylinder` with no exclusions."""
    return n_pairs * sum(1 for line in lines if line.camera_id != ref_image)

