"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 estimation failure, 3 invalid input.
"""

from __future__ import annotations

import argparse
import sys

from .bench import EXPERIMENTS, BenchConfig, run_benchmark, write_csv
from .errors import EstimationError, InvalidInput, TriangulationError
from .io import dumps, load_scene, result_to_dict
from .pipeline import (
    CROSS_SECTION_METHODS,
    DIRECTION_METHODS,
    PipelineConfig,
    match_cylinders,
    triangulate_cylinder,
    triangulate_groups,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ESTIMATION = 2
EXIT_INPUT = 3


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cyltri", description="Triangulate cylinders from silhouette lines.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("triangulate", help="estimate one cylinder (or one per group) from a scene file")
    t.add_argument("scene")
    t.add_argument("--direction", choices=DIRECTION_METHODS, default="lsq")
    t.add_argument("--cross-section", choices=CROSS_SECTION_METHODS, default="constrained-lsq")
    t.add_argument("--threshold", type=_positive_float, default=0.01, help="inlier tangency defect, scene units")
    t.add_argument("--iterations", type=_positive_int, default=500)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--group", action="store_true", help="one cylinder per line group label")
    t.add_argument("--output", "-o", help="result file (default: stdout)")

    m = sub.add_parser("match", help="match unlabelled silhouettes of parallel cylinders")
    m.add_argument("scene")
    m.add_argument("--ref-image", required=True, help="camera id whose lines carry left/right pair labels")
    m.add_argument("--direction", choices=DIRECTION_METHODS, default="lsq")
    m.add_argument("--threshold", type=_positive_float, default=0.01)
    m.add_argument("--min-inliers", type=_positive_int, default=3)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--output", "-o")

    s = sub.add_parser("synth", help="run a synthetic benchmark and write CSV")
    s.add_argument("experiment", choices=EXPERIMENTS)
    s.add_argument("--out", help="CSV file (default: stdout)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=_positive_int, default=100)
    s.add_argument("--timing", action="store_true", help="record runtime_us (output no longer reproducible)")

    v = sub.add_parser("validate", help="check a scene file against the schema and invariants")
    v.add_argument("scene")
    return p


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _ref_id(scene, text: str):
    for cid, _ in scene.cameras:
        if str(cid) == text:
            return cid
    raise InvalidInput(f"reference image {text!r} is not a camera of the scene")


def _run(args) -> int:
    if args.command == "validate":
        scene = load_scene(args.scene)
        print(f"ok: {len(scene.cameras)} cameras, {len(scene.lines)} lines")
        return EXIT_OK

    if args.command == "synth":
        cfg = BenchConfig(seed=args.seed, trials=args.trials, timing=args.timing)
        rows = run_benchmark(args.experiment, cfg)
        if args.out is None:
            write_csv(rows, sys.stdout)
        else:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                write_csv(rows, fh)
        return EXIT_OK

    scene = load_scene(args.scene)
    if args.command == "triangulate":
        cfg = PipelineConfig(
            direction=args.direction,
            cross_section=args.cross_section,
            threshold=args.threshold,
            iterations=args.iterations,
            seed=args.seed,
        )
        result = (triangulate_groups if args.group else triangulate_cylinder)(scene, cfg)
    else:
        cfg = PipelineConfig(
            direction=args.direction, threshold=args.threshold, min_inliers=args.min_inliers, seed=args.seed
        )
        result = match_cylinders(scene, _ref_id(scene, args.ref_image), cfg)
    _emit(dumps(result_to_dict(result)), args.output)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; --help exits 0
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _run(args)
    except InvalidInput as err:
        print(f"cyltri: invalid input: {err}", file=sys.stderr)
        return EXIT_INPUT
    except TriangulationError as err:
        cls = getattr(err.cause, "conic_class", None)
        extra = f" (conic class: {cls})" if cls else ""
        print(f"cyltri: estimation failed in {err.stage} stage: {err.cause}{extra}", file=sys.stderr)
        return EXIT_ESTIMATION
    except EstimationError as err:
        print(f"cyltri: estimation failed: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
