"""JSON scene and result files.

Floats are written with ``repr`` (shortest string that reads back to the
same double), so ``load(save(x)) == x`` bit for bit. Documents are checked
against JSON schemas before any semantic checks.

Scene::

    {"format": "cyltri-scene", "version": 1,
     "cameras": [{"id": "c0", "P": [12 numbers, row-major]}],
     "lines": [{"camera_id": "c0", "l": [a, b, c], "group": "A"}],
     "metadata": {"focal_length": 500.0}}

Result::

    {"format": "cyltri-result", "version": 1,
     "cylinders": [{"direction": [...], "axis_point": [...], "radius": r,
                    "inliers": [{"camera_id": "c0", "line": 3}],
                    "residuals": {"max": ..., "mean": ..., "max_px": ..., "mean_px": ...},
                    "method": "constrained-lsq", "conic_class": "circle",
                    "config": {...}}]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import InvalidInput
from .geometry import Camera, ImageLine

SCENE_FORMAT = "cyltri-scene"
RESULT_FORMAT = "cyltri-result"
VERSION = 1

_ID = {"type": ["string", "integer"]}
_NUM = {"type": "number"}


def _vec(n):
    return {"type": "array", "items": _NUM, "minItems": n, "maxItems": n}


SCENE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["format", "version", "cameras", "lines"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": SCENE_FORMAT},
        "version": {"const": VERSION},
        "cameras": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "P"],
                "additionalProperties": False,
                "properties": {"id": _ID, "P": _vec(12)},
            },
        },
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["camera_id", "l"],
                "additionalProperties": False,
                "properties": {"camera_id": _ID, "l": _vec(3), "group": {"type": ["string", "integer", "null"]}},
            },
        },
        "metadata": {"type": "object"},
    },
}

_RESIDUALS = {
    "type": "object",
    "required": ["max", "mean"],
    "additionalProperties": False,
    "properties": {
        "max": _NUM,
        "mean": _NUM,
        "max_px": {"type": ["number", "null"]},
        "mean_px": {"type": ["number", "null"]},
    },
}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["format", "version", "cylinders"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": RESULT_FORMAT},
        "version": {"const": VERSION},
        "cylinders": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["direction", "axis_point", "radius", "inliers", "residuals", "method", "config"],
                "additionalProperties": False,
                "properties": {
                    "direction": _vec(3),
                    "axis_point": _vec(3),
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                    "inliers": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["camera_id", "line"],
                            "additionalProperties": False,
                            "properties": {"camera_id": _ID, "line": {"type": "integer", "minimum": 0}},
                        },
                    },
                    "residuals": _RESIDUALS,
                    "method": {"type": "string"},
                    "conic_class": {"type": "string"},
                    "group": {"type": ["string", "integer", "null"]},
                    "config": {"type": "object"},
                },
            },
        },
    },
}


# ---------------------------------------------------------------------------
# scene
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SceneLine:
    camera_id: Any
    l: tuple[float, float, float]
    group: Any = None


@dataclass(frozen=True, eq=False)
class SceneFile:
    cameras: tuple  # of (id, 12-tuple P)
    lines: tuple  # of SceneLine
    metadata: dict = field(default_factory=dict)

    def camera_dict(self) -> dict:
        return {cid: Camera(np.array(P).reshape(3, 4), cid) for cid, P in self.cameras}

    def image_lines(self, labelled: bool = True) -> list[ImageLine]:
        return [ImageLine(np.array(ln.l), ln.camera_id, ln.group if labelled else None) for ln in self.lines]

    @property
    def focal_length(self) -> float | None:
        f = self.metadata.get("focal_length")
        return float(f) if isinstance(f, (int, float)) and f > 0 else None

    def __eq__(self, other):
        if not isinstance(other, SceneFile):
            return NotImplemented
        return (
            self.cameras == other.cameras
            and [(ln.camera_id, ln.l, ln.group) for ln in self.lines]
            == [(ln.camera_id, ln.l, ln.group) for ln in other.lines]
            and self.metadata == other.metadata
        )

    @classmethod
    def from_objects(cls, cameras, lines, metadata=None) -> "SceneFile":
        """Build from :class:`Camera` and :class:`ImageLine` instances."""
        cams = tuple((c.id, tuple(float(x) for x in c.P.ravel())) for c in cameras)
        lns = tuple(SceneLine(ln.camera_id, tuple(float(x) for x in ln.l), ln.label) for ln in lines)
        return cls(cams, lns, dict(metadata or {}))


def _schema_error(err: jsonschema.ValidationError, kind: str) -> InvalidInput:
    where = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return InvalidInput(f"{kind}{where}: {err.message}")


def _check_finite(values, where: str):
    for v in values:
        if not math.isfinite(v):
            raise InvalidInput(f"{where}: non-finite number")


def scene_from_dict(doc: dict) -> SceneFile:
    """Validate and convert; raises InvalidInput naming the offending entry."""
    try:
        jsonschema.validate(doc, SCENE_SCHEMA)
    except jsonschema.ValidationError as err:
        raise _schema_error(err, "scene") from None
    cameras, seen = [], set()
    for i, cam in enumerate(doc["cameras"]):
        if cam["id"] in seen:
            raise InvalidInput(f"scene.cameras[{i}]: duplicate camera id {cam['id']!r}")
        seen.add(cam["id"])
        P = tuple(float(x) for x in cam["P"])
        _check_finite(P, f"scene.cameras[{i}].P")
        try:
            Camera(np.array(P).reshape(3, 4), cam["id"])
        except InvalidInput as err:
            raise InvalidInput(f"scene.cameras[{i}]: {err}") from None
        cameras.append((cam["id"], P))
    lines = []
    for i, ln in enumerate(doc["lines"]):
        if ln["camera_id"] not in seen:
            raise InvalidInput(f"scene.lines[{i}]: references missing camera {ln['camera_id']!r}")
        l = tuple(float(x) for x in ln["l"])
        _check_finite(l, f"scene.lines[{i}].l")
        if not any(l):
            raise InvalidInput(f"scene.lines[{i}]: zero line vector")
        lines.append(SceneLine(ln["camera_id"], l, ln.get("group")))
    return SceneFile(tuple(cameras), tuple(lines), dict(doc.get("metadata", {})))


def scene_to_dict(scene: SceneFile) -> dict:
    lines = []
    for ln in scene.lines:
        entry = {"camera_id": ln.camera_id, "l": list(ln.l)}
        if ln.group is not None:
            entry["group"] = ln.group
        lines.append(entry)
    return {
        "format": SCENE_FORMAT,
        "version": VERSION,
        "cameras": [{"id": cid, "P": list(P)} for cid, P in scene.cameras],
        "lines": lines,
        "metadata": scene.metadata,
    }


# ---------------------------------------------------------------------------
# result
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderResult:
    direction: tuple[float, float, float]
    axis_point: tuple[float, float, float]
    radius: float
    inliers: tuple  # of (camera_id, line index)
    max_defect: float
    mean_defect: float
    method: str
    config: dict
    max_defect_px: float | None = None
    mean_defect_px: float | None = None
    conic_class: str | None = None
    group: Any = None


@dataclass(frozen=True)
class ResultFile:
    cylinders: tuple  # of CylinderResult


def _unit(v) -> tuple[float, float, float]:
    v = tuple(float(x) for x in v)
    n = math.sqrt(sum(x * x for x in v))
    if n == 0:
        raise InvalidInput("zero direction vector")
    # serialized directions are unit already; leave them bit-identical
    if abs(n - 1.0) <= 4e-16:
        return v
    return tuple(x / n for x in v)


def result_from_dict(doc: dict) -> ResultFile:
    try:
        jsonschema.validate(doc, RESULT_SCHEMA)
    except jsonschema.ValidationError as err:
        raise _schema_error(err, "result") from None
    out = []
    for c in doc["cylinders"]:
        res = c["residuals"]
        out.append(
            CylinderResult(
                direction=_unit(c["direction"]),
                axis_point=tuple(float(x) for x in c["axis_point"]),
                radius=float(c["radius"]),
                inliers=tuple((i["camera_id"], i["line"]) for i in c["inliers"]),
                max_defect=float(res["max"]),
                mean_defect=float(res["mean"]),
                method=c["method"],
                config=dict(c["config"]),
                max_defect_px=None if res.get("max_px") is None else float(res["max_px"]),
                mean_defect_px=None if res.get("mean_px") is None else float(res["mean_px"]),
                conic_class=c.get("conic_class"),
                group=c.get("group"),
            )
        )
    return ResultFile(tuple(out))


def result_to_dict(result: ResultFile) -> dict:
    cyls = []
    for c in result.cylinders:
        entry = {
            "direction": list(c.direction),
            "axis_point": list(c.axis_point),
            "radius": c.radius,
            "inliers": [{"camera_id": cid, "line": int(i)} for cid, i in c.inliers],
            "residuals": {
                "max": c.max_defect,
                "mean": c.mean_defect,
                "max_px": c.max_defect_px,
                "mean_px": c.mean_defect_px,
            },
            "method": c.method,
            "config": c.config,
        }
        if c.conic_class is not None:
            entry["conic_class"] = c.conic_class
        if c.group is not None:
            entry["group"] = c.group
        cyls.append(entry)
    return {"format": RESULT_FORMAT, "version": VERSION, "cylinders": cyls}


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _read(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise InvalidInput(f"cannot read {path}: {err.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise InvalidInput(f"{path}: invalid JSON: {err}") from None


def load_scene(path) -> SceneFile:
    return scene_from_dict(_read(path))


def save_scene(scene: SceneFile, path) -> None:
    Path(path).write_text(dumps(scene_to_dict(scene)), encoding="utf-8")


def load_result(path) -> ResultFile:
    return result_from_dict(_read(path))


def save_result(result: ResultFile, path) -> None:
    Path(path).write_text(dumps(result_to_dict(result)), encoding="utf-8")
