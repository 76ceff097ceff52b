"""Reproducible Monte-Carlo experiments emitting one CSV row per trial.

Every trial draws from ``default_rng([seed, experiment, cell, trial])`` so
rows do not depend on execution order. ``runtime_us`` is written as ``nan``
unless timing is enabled, which keeps default output byte-identical across
runs.

Experiments:

``numerics``
    Noiseless 3-camera scenes. One tangent per camera feeds the minimal
    solver; all six feed the constrained LSQ solver. Error columns describe
    the returned solution closest to the truth; ``n_solutions`` counts
    circles (minimal) or real stationary points (LSQ).
``noise_sweep``
    Constrained LSQ over ``n_lines`` x ``sigmas``.
``method_comparison``
    Constrained LSQ, the linear baseline and minimal RANSAC over view counts
    at a fixed sigma. The linear fit is allowed to be underdetermined.
``degeneracy``
    Cameras on a narrow arc around a unit circle versus the same number of
    cameras spread over the full circle, for linear and constrained LSQ.
``multi_cylinder``
    Seven-cylinder, twelve-image scenes matched without labels; one row per
    true cylinder.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import EstimationError, InvalidConfig
from .geometry import dual_conic_from_circle
from .robust import RansacConfig, exhaustive_multi_cylinder, ransac_circle
from .solvers import (
    classify_conic,
    circle_from_linear_conic,
    constrained_lsq_stationary,
    solve_linear_conic,
    solve_minimal_three_lines,
)
from .synthetic import SceneConfig, eval_error, frobenius_conic_error, generate_scene

CSV_HEADER = (
    "experiment",
    "seed",
    "n_lines",
    "sigma",
    "method",
    "center_error",
    "radius_error",
    "frobenius_error",
    "conic_class",
    "runtime_us",
    "n_solutions",
)

EXPERIMENTS = ("numerics", "noise_sweep", "method_comparison", "degeneracy", "multi_cylinder")


@dataclass(frozen=True)
class BenchConfig:
    seed: int = 0
    trials: int = 100
    timing: bool = False
    n_lines: tuple[int, ...] = (4, 6, 10)
    sigmas: tuple[float, ...] = tuple(np.linspace(0.0, 0.02, 10).tolist())
    views: tuple[int, ...] = (2, 3, 5, 10, 15)
    comparison_sigma: float = 0.01
    degeneracy_sigmas: tuple[float, ...] = (1e-6, 1e-5, 1e-4, 1e-3)
    degeneracy_views: int = 5
    arc_deg: float = 20.0
    arc_distance: float = 15.0
    match_threshold: float = 0.01
    match_sigma: float = 0.001
    ransac_threshold: float = 0.05

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidConfig("trials must be at least 1")
        if any(n < 4 or n % 2 for n in self.n_lines):
            raise InvalidConfig("n_lines entries must be even and at least 4")
        if any(s < 0 for s in self.sigmas + self.degeneracy_sigmas) or self.comparison_sigma < 0:
            raise InvalidConfig("sigmas must be non-negative")
        if any(v < 2 for v in self.views) or self.degeneracy_views < 2:
            raise InvalidConfig("view counts must be at least 2")


@dataclass
class Row:
    experiment: str
    seed: int
    n_lines: int
    sigma: float
    method: str
    center_error: float = math.nan
    radius_error: float = math.nan
    frobenius_error: float = math.nan
    conic_class: str = "none"
    runtime_us: float = math.nan
    n_solutions: int = 0
    extra: dict = field(default_factory=dict, repr=False)  # not written to CSV

    def values(self) -> list[str]:
        return [
            self.experiment,
            str(self.seed),
            str(self.n_lines),
            _fmt(self.sigma),
            self.method,
            _fmt(self.center_error),
            _fmt(self.radius_error),
            _fmt(self.frobenius_error),
            self.conic_class,
            _fmt(self.runtime_us),
            str(self.n_solutions),
        ]


def _fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.us = math.nan

    def __enter__(self):
        self._t = time.perf_counter_ns()
        return self

    def __exit__(self, *exc):
        if self.enabled:
            self.us = (time.perf_counter_ns() - self._t) / 1000.0
        return False


def _rng(cfg: BenchConfig, experiment: str, cell: int, trial: int):
    return np.random.default_rng([cfg.seed, EXPERIMENTS.index(experiment), cell, trial])


def _closest(circles, truth):
    errs = [eval_error(c, truth) for c in circles]
    k = min(range(len(errs)), key=lambda i: errs[i].total)
    return circles[k], errs[k]


def _fill(row: Row, circle, truth, conic=None, cls="circle"):
    e = eval_error(circle, truth)
    row.center_error, row.radius_error = e.center_error, e.radius_error
    d = dual_conic_from_circle(circle) if conic is None else conic
    row.frobenius_error = frobenius_conic_error(d, dual_conic_from_circle(truth))
    row.conic_class = cls


def _numerics(cfg: BenchConfig) -> Iterator[Row]:
    for trial in range(cfg.trials):
        rng = _rng(cfg, "numerics", 0, trial)
        scene = generate_scene(SceneConfig(n_cameras=3), rng)
        truth = scene.circles[0]
        pick = 2 * np.arange(3) + rng.integers(0, 2, 3)
        row = Row("numerics", cfg.seed, 3, 0.0, "minimal")
        try:
            with _Timer(cfg.timing) as tm:
                circles = solve_minimal_three_lines(scene.lines[pick])
            row.n_solutions = len(circles)
            _fill(row, _closest(circles, truth)[0], truth)
        except EstimationError:
            pass
        row.runtime_us = tm.us
        row.extra["lines"] = scene.lines[pick]
        row.extra["truth"] = truth
        yield row

        row = Row("numerics", cfg.seed, len(scene.lines), 0.0, "constrained_lsq")
        try:
            with _Timer(cfg.timing) as tm:
                points = constrained_lsq_stationary(scene.lines)
            row.n_solutions = len(points)
            circles = [p.circle for p in points if p.circle is not None]
            if circles:
                _fill(row, circles[0], truth)
        except EstimationError:
            pass
        row.runtime_us = tm.us
        yield row


def _lsq_row(experiment, cfg, lines, truth, sigma) -> Row:
    row = Row(experiment, cfg.seed, len(lines), sigma, "constrained_lsq")
    try:
        with _Timer(cfg.timing) as tm:
            points = constrained_lsq_stationary(lines)
        row.n_solutions = len(points)
        circles = [p.circle for p in points if p.circle is not None]
        if circles:
            _fill(row, circles[0], truth)
    except EstimationError:
        pass
    row.runtime_us = tm.us
    return row


def _linear_row(experiment, cfg, lines, truth, sigma) -> Row:
    row = Row(experiment, cfg.seed, len(lines), sigma, "linear")
    try:
        with _Timer(cfg.timing) as tm:
            conic = solve_linear_conic(lines, allow_underdetermined=True)
        row.conic_class = classify_conic(conic)
        row.frobenius_error = frobenius_conic_error(conic, dual_conic_from_circle(truth))
        try:
            circle, _ = circle_from_linear_conic(conic)
            e = eval_error(circle, truth)
            row.center_error, row.radius_error = e.center_error, e.radius_error
            row.n_solutions = 1
        except EstimationError:
            pass
    except EstimationError:
        pass
    row.runtime_us = tm.us
    return row


def _noise_sweep(cfg: BenchConfig) -> Iterator[Row]:
    cell = 0
    for n in cfg.n_lines:
        for sigma in cfg.sigmas:
            for trial in range(cfg.trials):
                rng = _rng(cfg, "noise_sweep", cell, trial)
                scene = generate_scene(SceneConfig(n_cameras=n // 2, sigma=sigma), rng)
                yield _lsq_row("noise_sweep", cfg, scene.lines, scene.circles[0], sigma)
            cell += 1


def _method_comparison(cfg: BenchConfig) -> Iterator[Row]:
    sigma = cfg.comparison_sigma
    for cell, views in enumerate(cfg.views):
        for trial in range(cfg.trials):
            rng = _rng(cfg, "method_comparison", cell, trial)
            scene = generate_scene(SceneConfig(n_cameras=views, sigma=sigma), rng)
            truth = scene.circles[0]
            yield _lsq_row("method_comparison", cfg, scene.lines, truth, sigma)
            yield _linear_row("method_comparison", cfg, scene.lines, truth, sigma)
            row = Row("method_comparison", cfg.seed, len(scene.lines), sigma, "minimal_ransac")
            try:
                rc = RansacConfig(exhaustive=True, inlier_threshold=cfg.ransac_threshold)
                with _Timer(cfg.timing) as tm:
                    circle, inliers = ransac_circle(scene.lines, rc)
                row.n_solutions = 1
                _fill(row, circle, truth)
            except EstimationError:
                pass
            row.runtime_us = tm.us
            yield row


def _degeneracy(cfg: BenchConfig) -> Iterator[Row]:
    for cell, sigma in enumerate(cfg.degeneracy_sigmas):
        for trial in range(cfg.trials):
            for layout in ("arc", "full"):
                rng = _rng(cfg, "degeneracy", 2 * cell + (layout == "full"), trial)
                arc = cfg.arc_deg if layout == "arc" else 360.0
                sc = SceneConfig(
                    n_cameras=cfg.degeneracy_views,
                    sigma=sigma,
                    radius_range=(1.0, 1.0),
                    center_box=0.0,
                    arc_deg=arc,
                    arc_distance=cfg.arc_distance,
                )
                scene = generate_scene(sc, rng)
                truth = scene.circles[0]
                for row in (
                    _linear_row("degeneracy", cfg, scene.lines, truth, sigma),
                    _lsq_row("degeneracy", cfg, scene.lines, truth, sigma),
                ):
                    if layout == "full":
                        row.method += "_full"
                    yield row


def _multi_cylinder(cfg: BenchConfig) -> Iterator[Row]:
    for trial in range(cfg.trials):
        rng = _rng(cfg, "multi_cylinder", 0, trial)
        sc = SceneConfig(n_cameras=12, n_cylinders=7, center_box=8.0, sigma=cfg.match_sigma)
        scene = generate_scene(sc, rng)
        lines = scene.image_lines()
        # only the reference image keeps its labels (its left/right pairs are known)
        unlabeled = [ln if ln.camera_id == 0 else type(ln)(ln.l, ln.camera_id) for ln in lines]
        with _Timer(cfg.timing) as tm:
            results = exhaustive_multi_cylinder(
                unlabeled, scene.camera_dict, 0, [0.0, 1.0, 0.0], RansacConfig(inlier_threshold=cfg.match_threshold)
            )
        for k, truth in enumerate(scene.circles):
            true_ids = set(np.flatnonzero(scene.labels == k).tolist())
            row = Row("multi_cylinder", cfg.seed, len(lines), cfg.match_sigma, "exhaustive_match")
            row.n_solutions = len(results)
            row.runtime_us = tm.us
            best = None
            for res in results:
                got = {i for _, i in res.matched_lines}
                overlap = len(got & true_ids)
                if best is None or overlap > best[0]:
                    best = (overlap, res, got)
            if best is not None and best[0] > 0:
                _fill(row, best[1].circle, truth)
                row.extra["matched_fraction"] = best[0] / len(true_ids)
                row.extra["false_matches"] = len(best[2] - true_ids)
            else:
                row.conic_class = "missing"
                row.extra["matched_fraction"] = 0.0
            row.extra["outlier_rate"] = 1.0 - len(true_ids) / len(lines)
            yield row


_RUNNERS = {
    "numerics": _numerics,
    "noise_sweep": _noise_sweep,
    "method_comparison": _method_comparison,
    "degeneracy": _degeneracy,
    "multi_cylinder": _multi_cylinder,
}


def run_benchmark(experiment: str, cfg: BenchConfig = BenchConfig()) -> Iterator[Row]:
    """Rows of ``experiment``, generated lazily in a fixed order."""
    if experiment not in _RUNNERS:
        raise InvalidConfig(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    return _RUNNERS[experiment](cfg)


def write_csv(rows: Iterable[Row], stream) -> int:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    n = 0
    for row in rows:
        w.writerow(row.values())
        n += 1
    return n


def rows_to_csv(rows: Iterable[Row]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse CSV text back into dicts with typed numeric columns."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        rec["seed"] = int(rec["seed"])
        rec["n_lines"] = int(rec["n_lines"])
        rec["n_solutions"] = int(rec["n_solutions"])
        for key in ("sigma", "center_error", "radius_error", "frobenius_error", "runtime_us"):
            rec[key] = float(rec[key])
        out.append(rec)
    return out

