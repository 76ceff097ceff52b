from __future__ import annotations

import numpy as np
import pytest

from conftest import tangents_of
from cyltri.errors import InvalidConfig, InvalidInput, NoConsensus
from cyltri.geometry import Circle2D, ImageLine
from cyltri.robust import (
    RansacConfig,
    exhaustive_multi_cylinder,
    expected_hypotheses,
    ransac_circle,
    reference_pairs,
)
from cyltri.synthetic import SceneConfig, generate_scene

TRUTH = Circle2D(0.5, -0.3, 1.2)


def _random_lines(rng, n, box=3.0):
    ang = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([np.cos(ang), np.sin(ang), rng.uniform(-box, box, n)])


def test_exact_tangents_all_inliers():
    L = tangents_of(TRUTH, np.linspace(0, 2 * np.pi, 12, endpoint=False) + 0.05)
    circle, inliers = ransac_circle(L, RansacConfig(inlier_threshold=1e-6))
    assert inliers == tuple(range(12))
    assert np.abs(circle.as_array() - TRUTH.as_array()).max() < 1e-8


def test_seventy_percent_outliers():
    hits = 0
    cfg = RansacConfig(exhaustive=True, inlier_threshold=0.01)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        L = np.vstack([tangents_of(TRUTH, rng.uniform(0, 2 * np.pi, 12)), _random_lines(rng, 28)])
        _, inliers = ransac_circle(L, cfg)
        hits += set(range(12)) <= set(inliers)
    assert hits >= 99


def test_too_few_lines():
    with pytest.raises(InvalidInput):
        ransac_circle(tangents_of(TRUTH, [0.0, 1.0]))


def test_no_consensus():
    rng = np.random.default_rng(0)
    with pytest.raises(NoConsensus):
        ransac_circle(_random_lines(rng, 6), RansacConfig(inlier_threshold=1e-9, min_inliers=5, exhaustive=True))


def test_config_validation():
    with pytest.raises(InvalidConfig):
        RansacConfig(inlier_threshold=0)
    with pytest.raises(InvalidConfig):
        RansacConfig(iterations=0)


def test_deterministic():
    rng = np.random.default_rng(5)
    L = np.vstack([tangents_of(TRUTH, rng.uniform(0, 6.3, 10)), _random_lines(rng, 10)])
    cfg = RansacConfig(iterations=200, seed=9)
    a, b = ransac_circle(L, cfg), ransac_circle(L, cfg)
    assert a[1] == b[1] and np.array_equal(a[0].as_array(), b[0].as_array())


def test_consensus_monotone():
    rng = np.random.default_rng(6)
    L = np.vstack([tangents_of(TRUTH, rng.uniform(0, 6.3, 8)), _random_lines(rng, 8)])
    cfg = RansacConfig(exhaustive=True, inlier_threshold=0.01)
    circle, inliers = ransac_circle(L, cfg)
    extra = tangents_of(circle, [1.234])
    _, more = ransac_circle(np.vstack([L, extra]), cfg)
    assert len(more) >= len(inliers)


def _multi(n_cyl, n_cam, seed, center_box=8.0):
    sc = generate_scene(SceneConfig(n_cameras=n_cam, n_cylinders=n_cyl, center_box=center_box, seed=seed))
    lines = [ln if ln.camera_id == 0 else ImageLine(ln.l, ln.camera_id) for ln in sc.image_lines()]
    return sc, lines


def test_single_cylinder_matches_everything():
    sc, lines = _multi(1, 6, 3, center_box=1.0)
    res = exhaustive_multi_cylinder(lines, sc.camera_dict, 0, [0, 1, 0], RansacConfig(inlier_threshold=1e-6))
    assert len(res) == 1
    assert sorted(i for _, i in res[0].matched_lines) == list(range(12))
    assert res[0].outlier_rate == 0.0
    assert np.abs(res[0].circle.as_array() - sc.circles[0].as_array()).max() < 1e-8


def test_hypothesis_count_is_linear():
    sc, lines = _multi(3, 6, 4)
    pairs = reference_pairs(lines, 0)
    assert len(pairs) == 3
    res = exhaustive_multi_cylinder(lines, sc.camera_dict, 0, [0, 1, 0])
    assert res.n_hypotheses == expected_hypotheses(lines, 0, 3) == 3 * (len(lines) - 6)


def test_seven_cylinders_twelve_images():
    sc, lines = _multi(7, 12, 0)
    res = exhaustive_multi_cylinder(lines, sc.camera_dict, 0, [0, 1, 0])
    assert len(res) == 7
    for r in res:
        ids = [i for _, i in r.matched_lines]
        assert len(set(sc.labels[ids])) == 1
        assert len(ids) == 24
        assert r.outlier_rate > 0.85


def test_wrong_pair_is_dominated():
    sc, lines = _multi(3, 8, 2)
    by_label = {k: [i for i, ln in enumerate(lines) if ln.camera_id == 0 and ln.label == k] for k in range(3)}
    good = [tuple(by_label[k]) for k in range(3)]
    bad = (by_label[0][0], by_label[1][1])
    res = exhaustive_multi_cylinder(lines, sc.camera_dict, 0, [0, 1, 0], ref_pairs=good + [bad])
    assert len(res) == 3
    for r in res:
        assert len(set(sc.labels[[i for _, i in r.matched_lines]])) == 1
    assert any(p == bad for p, _ in res.skipped_pairs)


def test_reference_pairs_validation():
    lines = [ImageLine([1, 0, 0], 0, "a"), ImageLine([0, 1, 0], 0, "a"), ImageLine([1, 1, 0], 0, "b")]
    with pytest.raises(InvalidInput):
        reference_pairs(lines, 0)
    with pytest.raises(InvalidInput):
        reference_pairs(lines, 1)


def test_inconsistent_lines_are_excluded():
    sc, lines = _multi(1, 5, 8, center_box=1.0)
    lines = lines + [ImageLine([0.0, 1.0, -0.2], 3)]
    res = exhaustive_multi_cylinder(lines, sc.camera_dict, 0, [0, 1, 0], RansacConfig(inlier_threshold=1e-6))
    assert res.excluded_lines == (10,)
    assert len(res[0].matched_lines) == 10
