"""Regenerate the packaged example scenes and the golden result.

Run from the repository root: ``python scripts/make_example_data.py``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from cyltri.io import result_to_dict, dumps, save_scene
from cyltri.pipeline import PipelineConfig, triangulate_cylinder
from cyltri.synthetic import SceneConfig, generate_scene, to_scene_file

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "src" / "cyltri" / "data"
GOLDEN = ROOT / "tests" / "data"

# tilt the vertical axis so the example exercises rectification
ANGLE = 0.3
TILT = np.array([[1, 0, 0], [0, np.cos(ANGLE), -np.sin(ANGLE)], [0, np.sin(ANGLE), np.cos(ANGLE)]])


def main():
    single = generate_scene(SceneConfig(n_cameras=6, sigma=0.002, seed=2024))
    single_file = to_scene_file(single, TILT, metadata={"focal_length": 500.0, "units": "m"})
    save_scene(single_file, DATA / "example_scene.json")

    multi = generate_scene(SceneConfig(n_cameras=8, n_cylinders=3, center_box=5.0, sigma=0.001, seed=7))
    save_scene(to_scene_file(multi, TILT, label_mode="ref"), DATA / "example_multi.json")

    result = triangulate_cylinder(single_file, PipelineConfig())
    GOLDEN.mkdir(parents=True, exist_ok=True)
    (GOLDEN / "example_result.json").write_text(dumps(result_to_dict(result)), encoding="utf-8")


if __name__ == "__main__":
    main()
