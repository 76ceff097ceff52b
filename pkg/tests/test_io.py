from __future__ import annotations

import copy
import json

import numpy as np
import pytest

from cyltri.errors import InvalidInput
from cyltri.io import (
    CylinderResult,
    ResultFile,
    dumps,
    load_result,
    load_scene,
    result_from_dict,
    result_to_dict,
    save_result,
    save_scene,
    scene_from_dict,
    scene_to_dict,
)
from cyltri.synthetic import SceneConfig, generate_scene, to_scene_file


@pytest.fixture
def scene():
    sc = generate_scene(SceneConfig(n_cameras=3, sigma=0.003, seed=21))
    return to_scene_file(sc, metadata={"focal_length": 500.0, "note": "x"})


def _result():
    return ResultFile(
        (
            CylinderResult(
                direction=(0.1, 0.2, float(np.sqrt(1 - 0.05))),
                axis_point=(1 / 3, -2e-17, 1e300),
                radius=0.1 + 0.2,
                inliers=(("c0", 0), (1, 4)),
                max_defect=1e-9,
                mean_defect=5e-10,
                method="constrained-lsq",
                config={"seed": 3},
                max_defect_px=5e-7,
                mean_defect_px=None,
                conic_class="circle",
                group="A",
            ),
        )
    )


def test_scene_round_trip(tmp_path, scene):
    path = tmp_path / "s.json"
    save_scene(scene, path)
    back = load_scene(path)
    assert back == scene
    for (_, p), (_, q) in zip(scene.cameras, back.cameras):
        assert np.array(p).tobytes() == np.array(q).tobytes()


def test_result_round_trip(tmp_path):
    res = _result()
    path = tmp_path / "r.json"
    save_result(res, path)
    assert load_result(path) == res


def test_direction_renormalised_on_load():
    doc = result_to_dict(_result())
    doc["cylinders"][0]["direction"] = [0.0, 2.0, 0.0]
    assert result_from_dict(doc).cylinders[0].direction == (0.0, 1.0, 0.0)


def test_missing_camera_names_the_line(scene):
    doc = scene_to_dict(scene)
    doc["lines"][4]["camera_id"] = 99
    with pytest.raises(InvalidInput, match=r"scene\.lines\[4\].*99"):
        scene_from_dict(doc)


@pytest.mark.parametrize(
    "mutate, pattern",
    [
        (lambda d: d.pop("cameras"), "cameras"),
        (lambda d: d.__setitem__("cameras", []), "cameras"),
        (lambda d: d["cameras"][0]["P"].pop(), r"cameras\[0\]\.P"),
        (lambda d: d["lines"][2].__setitem__("l", [1, 2]), r"lines\[2\]\.l"),
        (lambda d: d.__setitem__("format", "other"), "format"),
        (lambda d: d["cameras"].append(copy.deepcopy(d["cameras"][0])), "duplicate"),
        (lambda d: d["cameras"][1]["P"].__setitem__(0, 3.0), r"cameras\[1\]"),
        (lambda d: d["lines"][0].__setitem__("l", [0, 0, 0]), r"lines\[0\]"),
        (lambda d: d["lines"][0].__setitem__("extra", 1), r"lines\[0\]"),
    ],
)
def test_scene_errors(scene, mutate, pattern):
    doc = scene_to_dict(scene)
    mutate(doc)
    with pytest.raises(InvalidInput, match=pattern):
        scene_from_dict(doc)


def test_bad_files(tmp_path):
    with pytest.raises(InvalidInput):
        load_scene(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidInput):
        load_scene(bad)


def test_result_schema():
    doc = result_to_dict(_result())
    doc["cylinders"][0]["radius"] = -1
    with pytest.raises(InvalidInput, match="radius"):
        result_from_dict(doc)


def test_dumps_rejects_nan_and_is_stable(scene):
    text = dumps(scene_to_dict(scene))
    assert text.endswith("\n") and json.loads(text) == scene_to_dict(scene)
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_focal_length(scene):
    assert scene.focal_length == 500.0
