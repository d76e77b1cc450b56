"""Scene graph data model with strict parsing and canonical serialization.

The on-disk format is scene JSON schema v1, documented in
``docs/scene-schema.md``. All lengths are meters, angles are degrees,
and the up axis is y. Object positions are box centers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

SCHEMA_VERSION = "1"

# Footprint area (width * depth, m^2) at or above which an object counts
# as "large". Separates chairs/lamps from wardrobes/sofas in typical
# asset catalogs.
LARGE_FOOTPRINT_AREA = 0.5

_GEOM_TOL = 1e-6


class SceneError(Exception):
    """Base class for scene model errors."""


class MalformedInput(SceneError):
    """Input is not syntactically valid JSON."""


class SchemaViolation(SceneError):
    """A field is missing, has the wrong type, or is unknown."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantViolation(SceneError):
    """The parsed document violates a scene invariant."""

    def __init__(self, code: str, path: str, detail: str):
        super().__init__(f"{code} at {path}: {detail}")
        self.code = code
        self.path = path
        self.detail = detail


@dataclass(frozen=True)
class Door:
    id: str
    wall_index: int
    center: tuple[float, float]
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", _pt2(self.center))
        object.__setattr__(self, "width", float(self.width))


@dataclass(frozen=True)
class Window:
    """Wall-anchored segment. Carried as metadata only; no constraint
    consumes windows."""

    wall_index: int
    center: tuple[float, float]
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", _pt2(self.center))
        object.__setattr__(self, "width", float(self.width))


@dataclass(frozen=True)
class Room:
    floor_polygon: tuple[tuple[float, float], ...]
    height: float
    doors: tuple[Door, ...] = ()
    windows: tuple[Window, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "floor_polygon", tuple(_pt2(p) for p in self.floor_polygon)
        )
        object.__setattr__(self, "height", float(self.height))
        object.__setattr__(self, "doors", tuple(self.doors))
        object.__setattr__(self, "windows", tuple(self.windows))

    def door(self, door_id: str) -> Door:
        for d in self.doors:
            if d.id == door_id:
                return d
        raise KeyError(door_id)

    def wall_segment(self, index: int) -> tuple[tuple[float, float], tuple[float, float]]:
        poly = self.floor_polygon
        return poly[index], poly[(index + 1) % len(poly)]


@dataclass(frozen=True)
class SceneObject:
    id: str
    class_label: str
    position: tuple[float, float, float]
    yaw: float
    dims: tuple[float, float, float]
    movable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "position", _pt3(self.position))
        object.__setattr__(self, "dims", _pt3(self.dims))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    @property
    def footprint_area(self) -> float:
        w, _, d = self.dims
        return w * d

    @property
    def mass_class(self) -> str:
        """"large" iff the footprint area is at or above
        LARGE_FOOTPRINT_AREA, else "small"."""
        return "large" if self.footprint_area >= LARGE_FOOTPRINT_AREA else "small"


@dataclass(frozen=True)
class SceneGraph:
    room: Room
    objects: tuple[SceneObject, ...] = ()
    exits: tuple[str, ...] = ()
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "exits", tuple(self.exits))

    def object_ids(self) -> tuple[str, ...]:
        return tuple(o.id for o in self.objects)

    def get_object(self, object_id: str) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)

    def with_object_replaced(self, obj: SceneObject) -> "SceneGraph":
        objs = tuple(obj if o.id == obj.id else o for o in self.objects)
        return SceneGraph(self.room, objs, self.exits, self.schema_version)

    def without_object(self, object_id: str) -> "SceneGraph":
        objs = tuple(o for o in self.objects if o.id != object_id)
        return SceneGraph(self.room, objs, self.exits, self.schema_version)


@dataclass
class ValidationEntry:
    code: str
    path: str
    detail: str


@dataclass
class ValidationReport:
    entries: list[ValidationEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.entries

    def codes(self) -> list[str]:
        return [e.code for e in self.entries]

    def add(self, code: str, path: str, detail: str) -> None:
        self.entries.append(ValidationEntry(code, path, detail))

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"code": e.code, "path": e.path, "detail": e.detail}
                for e in self.entries
            ],
        }


def normalize_yaw(yaw: float) -> float:
    """Map any angle in degrees onto [0, 360)."""
    y = float(yaw) % 360.0
    # -1e-12 % 360.0 == 360.0 in floating point; fold back.
    return 0.0 if y == 360.0 else y


def _pt2(p) -> tuple[float, float]:
    return (float(p[0]), float(p[1]))


def _pt3(p) -> tuple[float, float, float]:
    return (float(p[0]), float(p[1]), float(p[2]))


# ---------------------------------------------------------------------------
# Strict parsing


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise SchemaViolation(f"{path}.{key}", "missing required field")
    return d[key]


def _check_keys(d: dict, allowed: set[str], path: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise SchemaViolation(path, f"unknown field(s): {sorted(extra)}")


def _as_str(v, path: str) -> str:
    if not isinstance(v, str):
        raise SchemaViolation(path, f"expected string, got {type(v).__name__}")
    return v


def _as_bool(v, path: str) -> bool:
    if not isinstance(v, bool):
        raise SchemaViolation(path, f"expected boolean, got {type(v).__name__}")
    return v


def _as_int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaViolation(path, f"expected integer, got {type(v).__name__}")
    return v


def _as_num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaViolation(path, f"expected number, got {type(v).__name__}")
    f = float(v)
    if not math.isfinite(f):
        raise SchemaViolation(path, "number must be finite")
    return f


def _as_list(v, path: str, length: int | None = None) -> list:
    if not isinstance(v, list):
        raise SchemaViolation(path, f"expected array, got {type(v).__name__}")
    if length is not None and len(v) != length:
        raise SchemaViolation(path, f"expected array of length {length}, got {len(v)}")
    return v


def _as_dict(v, path: str) -> dict:
    if not isinstance(v, dict):
        raise SchemaViolation(path, f"expected object, got {type(v).__name__}")
    return v


def _parse_point2(v, path: str) -> tuple[float, float]:
    lst = _as_list(v, path, 2)
    return (_as_num(lst[0], f"{path}[0]"), _as_num(lst[1], f"{path}[1]"))


def _parse_point3(v, path: str) -> tuple[float, float, float]:
    lst = _as_list(v, path, 3)
    return (
        _as_num(lst[0], f"{path}[0]"),
        _as_num(lst[1], f"{path}[1]"),
        _as_num(lst[2], f"{path}[2]"),
    )


def _parse_door(v, path: str) -> Door:
    d = _as_dict(v, path)
    _check_keys(d, {"id", "wall_index", "center", "width"}, path)
    return Door(
        id=_as_str(_require(d, "id", path), f"{path}.id"),
        wall_index=_as_int(_require(d, "wall_index", path), f"{path}.wall_index"),
        center=_parse_point2(_require(d, "center", path), f"{path}.center"),
        width=_as_num(_require(d, "width", path), f"{path}.width"),
    )


def _parse_window(v, path: str) -> Window:
    d = _as_dict(v, path)
    _check_keys(d, {"wall_index", "center", "width"}, path)
    return Window(
        wall_index=_as_int(_require(d, "wall_index", path), f"{path}.wall_index"),
        center=_parse_point2(_require(d, "center", path), f"{path}.center"),
        width=_as_num(_require(d, "width", path), f"{path}.width"),
    )


def _parse_object(v, path: str) -> SceneObject:
    d = _as_dict(v, path)
    _check_keys(
        d, {"id", "class_label", "position", "yaw", "dims", "movable"}, path
    )
    return SceneObject(
        id=_as_str(_require(d, "id", path), f"{path}.id"),
        class_label=_as_str(_require(d, "class_label", path), f"{path}.class_label"),
        position=_parse_point3(_require(d, "position", path), f"{path}.position"),
        yaw=_as_num(_require(d, "yaw", path), f"{path}.yaw"),
        dims=_parse_point3(_require(d, "dims", path), f"{path}.dims"),
        movable=_as_bool(d.get("movable", True), f"{path}.movable"),
    )


def _reject_nonfinite(value):
    raise MalformedInput(f"non-finite literal {value!r} not allowed")


def parse_scene(data: bytes | str) -> SceneGraph:
    """Parse and validate scene JSON.

    Raises MalformedInput on bad syntax, SchemaViolation on missing or
    ill-typed fields, and InvariantViolation when the document is
    well-formed but breaks a scene invariant.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedInput(f"not valid UTF-8: {e}") from e
    try:
        raw = json.loads(data, parse_constant=_reject_nonfinite)
    except json.JSONDecodeError as e:
        raise MalformedInput(f"invalid JSON: {e}") from e

    doc = _as_dict(raw, "$")
    _check_keys(doc, {"schema_version", "room", "objects", "exits"}, "$")
    version = _as_str(_require(doc, "schema_version", "$"), "$.schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaViolation("$.schema_version", f"unsupported version {version!r}")

    room_d = _as_dict(_require(doc, "room", "$"), "$.room")
    _check_keys(room_d, {"floor_polygon", "height", "doors", "windows"}, "$.room")
    poly = [
        _parse_point2(p, f"$.room.floor_polygon[{i}]")
        for i, p in enumerate(_as_list(_require(room_d, "floor_polygon", "$.room"), "$.room.floor_polygon"))
    ]
    doors = [
        _parse_door(v, f"$.room.doors[{i}]")
        for i, v in enumerate(_as_list(room_d.get("doors", []), "$.room.doors"))
    ]
    windows = [
        _parse_window(v, f"$.room.windows[{i}]")
        for i, v in enumerate(_as_list(room_d.get("windows", []), "$.room.windows"))
    ]
    room = Room(
        floor_polygon=tuple(poly),
        height=_as_num(_require(room_d, "height", "$.room"), "$.room.height"),
        doors=tuple(doors),
        windows=tuple(windows),
    )

    objects = [
        _parse_object(v, f"$.objects[{i}]")
        for i, v in enumerate(_as_list(doc.get("objects", []), "$.objects"))
    ]
    exits = [
        _as_str(v, f"$.exits[{i}]")
        for i, v in enumerate(_as_list(doc.get("exits", []), "$.exits"))
    ]

    g = SceneGraph(room=room, objects=tuple(objects), exits=tuple(exits))
    report = validate_scene(g)
    if not report.ok:
        first = report.entries[0]
        raise InvariantViolation(first.code, first.path, first.detail)
    return g


# ---------------------------------------------------------------------------
# Canonical serialization


def _scene_to_doc(g: SceneGraph) -> dict:
    # Key order is fixed; dicts preserve insertion order.
    return {
        "schema_version": g.schema_version,
        "room": {
            "floor_polygon": [[x, z] for x, z in g.room.floor_polygon],
            "height": g.room.height,
            "doors": [
                {
                    "id": d.id,
                    "wall_index": d.wall_index,
                    "center": [d.center[0], d.center[1]],
                    "width": d.width,
                }
                for d in g.room.doors
            ],
            "windows": [
                {
                    "wall_index": w.wall_index,
                    "center": [w.center[0], w.center[1]],
                    "width": w.width,
                }
                for w in g.room.windows
            ],
        },
        "objects": [
            {
                "id": o.id,
                "class_label": o.class_label,
                "position": list(o.position),
                "yaw": o.yaw,
                "dims": list(o.dims),
                "movable": o.movable,
            }
            for o in g.objects
        ],
        "exits": list(g.exits),
    }


def serialize_scene(g: SceneGraph) -> bytes:
    """Canonical byte form: fixed key order, shortest round-trip floats.

    parse_scene(serialize_scene(g)) is structurally equal to g, and equal
    graphs serialize to identical bytes.
    """
    text = json.dumps(_scene_to_doc(g), ensure_ascii=False, indent=2)
    return (text + "\n").encode("utf-8")


def scene_to_json(g: SceneGraph) -> str:
    """Compact single-line JSON of the scene (for prompts and logs)."""
    return json.dumps(_scene_to_doc(g), ensure_ascii=False, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Validation


def _seg_len(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def _point_seg_distance(p, a, b) -> float:
    ax, az = a
    bx, bz = b
    px, pz = p
    dx, dz = bx - ax, bz - az
    denom = dx * dx + dz * dz
    if denom == 0.0:
        return math.hypot(px - ax, pz - az)
    t = ((px - ax) * dx + (pz - az) * dz) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), pz - (az + t * dz))


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    """True when the open segments cross or overlap (shared endpoints of
    adjacent polygon edges are excluded by the caller)."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    def on_segment(a, b, c):
        return (
            min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12
        )

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    # Collinear overlap counts as intersection.
    if o1 == 0 and on_segment(p1, p2, p3):
        return True
    if o2 == 0 and on_segment(p1, p2, p4):
        return True
    if o3 == 0 and on_segment(p3, p4, p1):
        return True
    if o4 == 0 and on_segment(p3, p4, p2):
        return True
    return False


def polygon_signed_area(poly) -> float:
    total = 0.0
    n = len(poly)
    for i in range(n):
        x1, z1 = poly[i]
        x2, z2 = poly[(i + 1) % n]
        total += x1 * z2 - x2 * z1
    return total / 2.0


def _polygon_is_simple(poly) -> bool:
    n = len(poly)
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        if _seg_len(a1, a2) < 1e-12:
            return False
        for j in range(i + 1, n):
            adjacent = j == (i + 1) % n or (i == 0 and j == n - 1) or i == (j + 1) % n
            if adjacent:
                continue
            b1, b2 = poly[j], poly[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                return False
    return True


def validate_scene(g: SceneGraph) -> ValidationReport:
    """Check every scene invariant; the report is empty iff g is valid."""
    report = ValidationReport()
    poly = g.room.floor_polygon

    if len(poly) < 3:
        report.add(
            "POLYGON_TOO_FEW_VERTICES",
            "$.room.floor_polygon",
            f"{len(poly)} vertices, need at least 3",
        )
    else:
        if not _polygon_is_simple(poly):
            report.add(
                "POLYGON_NOT_SIMPLE", "$.room.floor_polygon", "edges self-intersect"
            )
        elif polygon_signed_area(poly) <= 0:
            report.add(
                "POLYGON_NOT_CCW",
                "$.room.floor_polygon",
                "vertices must wind counter-clockwise",
            )

    if g.room.height <= 0:
        report.add("NONPOSITIVE_ROOM_HEIGHT", "$.room.height", f"{g.room.height}")

    door_ids: set[str] = set()
    for i, d in enumerate(g.room.doors):
        path = f"$.room.doors[{i}]"
        if d.id in door_ids:
            report.add("DUPLICATE_DOOR_ID", path, d.id)
        door_ids.add(d.id)
        if d.width <= 0:
            report.add("NONPOSITIVE_DOOR_WIDTH", f"{path}.width", f"{d.width}")
            continue
        if len(poly) < 3 or not (0 <= d.wall_index < len(poly)):
            report.add("DOOR_BAD_WALL_INDEX", f"{path}.wall_index", f"{d.wall_index}")
            continue
        a, b = g.room.wall_segment(d.wall_index)
        if _point_seg_distance(d.center, a, b) > _GEOM_TOL:
            report.add("DOOR_OFF_WALL", path, f"door {d.id!r} center not on wall")
            continue
        # center +/- width/2 must stay within the wall segment
        wall_len = _seg_len(a, b)
        ux, uz = (b[0] - a[0]) / wall_len, (b[1] - a[1]) / wall_len
        t = (d.center[0] - a[0]) * ux + (d.center[1] - a[1]) * uz
        if t - d.width / 2 < -_GEOM_TOL or t + d.width / 2 > wall_len + _GEOM_TOL:
            report.add("DOOR_OFF_WALL", path, f"door {d.id!r} extends past wall end")

    seen_obj: set[str] = set()
    for i, o in enumerate(g.objects):
        path = f"$.objects[{i}]"
        if not o.id:
            report.add("EMPTY_OBJECT_ID", f"{path}.id", "object id must be non-empty")
        if o.id in seen_obj:
            report.add("DUPLICATE_OBJECT_ID", f"{path}.id", o.id)
        seen_obj.add(o.id)
        if not all(v > 0 for v in o.dims):
            report.add("NONPOSITIVE_DIMS", f"{path}.dims", f"{o.dims}")

    seen_exit: set[str] = set()
    for i, e in enumerate(g.exits):
        path = f"$.exits[{i}]"
        if e in seen_exit:
            report.add("DUPLICATE_EXIT", path, e)
        seen_exit.add(e)
        if e not in door_ids:
            report.add("UNKNOWN_EXIT", path, f"exit {e!r} is not a door id")

    return report


# ---------------------------------------------------------------------------
# Holodeck-style converter stub


def convert_holodeck(doc: dict, exits: list[str] | None = None) -> SceneGraph:
    """Convert a Holodeck-style procedural export into scene schema v1.

    Handles the common subset: first room's floorPolygon/ceilingHeight,
    objects with dict positions and yaw rotations, doors placed by a
    point on (or near) a wall. Objects without size information get a
    0.5 m cube fallback. exits defaults to all door ids.
    """
    rooms = doc.get("rooms") or []
    if not rooms:
        raise SchemaViolation("$.rooms", "no rooms in export")
    room_d = rooms[0]
    poly = tuple(
        (float(p["x"]), float(p["z"])) for p in room_d["floorPolygon"]
    )
    if polygon_signed_area(poly) < 0:
        poly = tuple(reversed(poly))
    height = float(room_d.get("ceilingHeight", 2.5))

    doors = []
    for i, d in enumerate(doc.get("doors", [])):
        pos = d.get("assetPosition") or d.get("position") or {}
        center = (float(pos.get("x", 0.0)), float(pos.get("z", 0.0)))
        # snap to the nearest wall segment
        best, best_dist = 0, float("inf")
        for wi in range(len(poly)):
            a, b = poly[wi], poly[(wi + 1) % len(poly)]
            dist = _point_seg_distance(center, a, b)
            if dist < best_dist:
                best, best_dist = wi, dist
        a, b = poly[best], poly[(best + 1) % len(poly)]
        wall_len = _seg_len(a, b)
        ux, uz = (b[0] - a[0]) / wall_len, (b[1] - a[1]) / wall_len
        t = (center[0] - a[0]) * ux + (center[1] - a[1]) * uz
        t = min(max(t, 0.0), wall_len)
        snapped = (a[0] + t * ux, a[1] + t * uz)
        doors.append(
            Door(
                id=str(d.get("id", f"door_{i}")),
                wall_index=best,
                center=snapped,
                width=float(d.get("width", 0.9)),
            )
        )

    objects = []
    for i, o in enumerate(doc.get("objects", [])):
        pos = o.get("position", {})
        rot = o.get("rotation", 0.0)
        yaw = float(rot.get("y", 0.0)) if isinstance(rot, dict) else float(rot)
        size = o.get("size") or o.get("boundingBox")
        if isinstance(size, dict) and {"x", "y", "z"} <= set(size):
            dims = (float(size["x"]), float(size["y"]), float(size["z"]))
        else:
            dims = (0.5, 0.5, 0.5)
        objects.append(
            SceneObject(
                id=str(o.get("id", f"object_{i}")),
                class_label=str(o.get("assetId", o.get("id", "object"))).split("-")[0],
                position=(
                    float(pos.get("x", 0.0)),
                    float(pos.get("y", dims[1] / 2.0)),
                    float(pos.get("z", 0.0)),
                ),
                yaw=yaw,
                dims=dims,
                movable=bool(o.get("movable", True)),
            )
        )

    door_ids = [d.id for d in doors]
    return SceneGraph(
        room=Room(floor_polygon=poly, height=height, doors=tuple(doors)),
        objects=tuple(objects),
        exits=tuple(exits if exits is not None else door_ids),
    )
