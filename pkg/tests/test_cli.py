from __future__ import annotations

import json
import subprocess
import sys
from importlib import resources

import pytest

from cyltri.cli import main
from cyltri.io import load_result, load_scene, result_to_dict, save_scene, scene_to_dict
from cyltri.pipeline import PipelineConfig, match_cylinders, triangulate_cylinder
from cyltri.synthetic import SceneConfig, generate_scene, to_scene_file

EXAMPLE = str(resources.files("cyltri") / "data" / "example_scene.json")
MULTI = str(resources.files("cyltri") / "data" / "example_multi.json")


def test_validate_ok(capsys):
    assert main(["validate", EXAMPLE]) == 0
    assert capsys.readouterr().out.strip() == "ok: 6 cameras, 12 lines"


def test_validate_missing_camera(tmp_path, capsys):
    doc = scene_to_dict(load_scene(EXAMPLE))
    doc["lines"][7]["camera_id"] = 42
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path)]) == 3
    assert "lines[7]" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["triangulate", EXAMPLE, "--cross-section", "svd"]) == 1
    assert main(["triangulate", EXAMPLE, "--threshold", "-1"]) == 1
    assert main(["match", MULTI]) == 1  # --ref-image is required
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_unreadable_scene(tmp_path, capsys):
    assert main(["triangulate", str(tmp_path / "none.json")]) == 3
    capsys.readouterr()


def test_triangulate_equals_library(tmp_path):
    out = tmp_path / "r.json"
    assert main(["triangulate", EXAMPLE, "-o", str(out)]) == 0
    expected = result_to_dict(triangulate_cylinder(load_scene(EXAMPLE), PipelineConfig()))
    assert json.loads(out.read_text()) == expected
    assert load_result(out) == triangulate_cylinder(load_scene(EXAMPLE))


def test_triangulate_ransac_options_equal_library(tmp_path):
    out = tmp_path / "r.json"
    args = ["--direction", "ransac", "--cross-section", "minimal-ransac", "--threshold", "0.02", "--seed", "4"]
    assert main(["triangulate", EXAMPLE, *args, "--iterations", "50", "-o", str(out)]) == 0
    cfg = PipelineConfig(direction="ransac", cross_section="minimal-ransac", threshold=0.02, seed=4, iterations=50)
    assert json.loads(out.read_text()) == result_to_dict(triangulate_cylinder(load_scene(EXAMPLE), cfg))


def test_match_equals_library(tmp_path):
    out = tmp_path / "m.json"
    assert main(["match", MULTI, "--ref-image", "0", "-o", str(out)]) == 0
    assert json.loads(out.read_text()) == result_to_dict(match_cylinders(load_scene(MULTI), 0))
    assert main(["match", MULTI, "--ref-image", "zz"]) == 3


def test_estimation_failure_exit_code(tmp_path, capsys):
    cfg = SceneConfig(n_cameras=3, sigma=1e-3, radius_range=(1, 1), center_box=0, arc_deg=20, arc_distance=15, seed=5)
    path = tmp_path / "arc.json"
    save_scene(to_scene_file(generate_scene(cfg)), path)
    assert main(["triangulate", str(path), "--cross-section", "linear"]) == 2
    err = capsys.readouterr().err
    assert "cross-section" in err and "hyperbola" in err
    assert main(["triangulate", str(path)]) == 0
    capsys.readouterr()


def test_group_mode(tmp_path, capsys):
    path = tmp_path / "g.json"
    save_scene(to_scene_file(generate_scene(SceneConfig(n_cameras=3, n_cylinders=2, center_box=6, seed=1))), path)
    assert main(["triangulate", str(path), "--group"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [c["group"] for c in doc["cylinders"]] == [0, 1]


def test_synth_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["synth", "numerics", "--seed", "7", "--trials", "20", "--out", str(a)]) == 0
    assert main(["synth", "numerics", "--seed", "7", "--trials", "20", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_bytes().split(b"\n")
    assert lines[0] == b"experiment,seed,n_lines,sigma,method,center_error,radius_error,frobenius_error,conic_class,runtime_us,n_solutions"
    assert len(lines) == 2 * 20 + 2  # header, rows, trailing newline


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cyltri", "validate", EXAMPLE], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ok:")
    proc = subprocess.run([sys.executable, "-m", "cyltri", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1


@pytest.mark.parametrize("sub", ["triangulate", "match", "synth", "validate"])
def test_subcommand_help(sub, capsys):
    assert main([sub, "--help"]) == 0
    capsys.readouterr()
