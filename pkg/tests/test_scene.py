from __future__ import annotations

import json

import pytest

from conftest import SCENES, FIXTURES, fixture_scene_paths, make_box, simple_scene
from sceneloop.scene import (
    Door,
    InvariantViolation,
    MalformedInput,
    Room,
    SceneGraph,
    SchemaViolation,
    convert_holodeck,
    parse_scene,
    serialize_scene,
    validate_scene,
)

MINIMAL = {
    "schema_version": "1",
    "room": {
        "floor_polygon": [[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0]],
        "height": 2.5,
        "doors": [{"id": "d0", "wall_index": 0, "center": [2.0, 0.0], "width": 0.9}],
        "windows": [],
    },
    "objects": [],
    "exits": ["d0"],
}


def test_parse_minimal_scene():
    g = parse_scene(json.dumps(MINIMAL).encode("utf-8"))
    assert len(g.objects) == 0
    assert g.room.doors[0].id == "d0"
    assert g.exits == ("d0",)


def test_parse_rejects_bad_syntax():
    with pytest.raises(MalformedInput):
        parse_scene(b"{not json")


def test_parse_rejects_non_utf8():
    with pytest.raises(MalformedInput):
        parse_scene(b"\xff\xfe{}")


def test_parse_rejects_nan():
    doc = json.loads(json.dumps(MINIMAL))
    text = json.dumps(doc).replace("2.5", "NaN")
    with pytest.raises(MalformedInput):
        parse_scene(text)


@pytest.mark.parametrize(
    "mutate,path_fragment",
    [
        (lambda d: d.pop("room"), "room"),
        (lambda d: d["room"].pop("height"), "height"),
        (lambda d: d["room"]["doors"][0].update(width="wide"), "width"),
        (lambda d: d.update(extra_key=1), "$"),
        (lambda d: d["objects"].append({"id": "x"}), "objects[0]"),
    ],
)
def test_parse_schema_violations_carry_path(mutate, path_fragment):
    doc = json.loads(json.dumps(MINIMAL))
    mutate(doc)
    with pytest.raises(SchemaViolation) as exc:
        parse_scene(json.dumps(doc))
    assert path_fragment in str(exc.value)


def test_parse_duplicate_object_id_raises():
    doc = json.loads(json.dumps(MINIMAL))
    obj = {
        "id": "chair_0",
        "class_label": "chair",
        "position": [1.0, 0.5, 1.0],
        "yaw": 0.0,
        "dims": [0.5, 1.0, 0.5],
        "movable": True,
    }
    doc["objects"] = [obj, dict(obj, position=[2.0, 0.5, 1.0])]
    with pytest.raises(InvariantViolation) as exc:
        parse_scene(json.dumps(doc))
    assert exc.value.code == "DUPLICATE_OBJECT_ID"
    assert "chair_0" in str(exc.value)


def test_parse_fixture_corpus():
    for path in fixture_scene_paths():
        g = parse_scene(path.read_bytes())
        assert validate_scene(g).ok, path


def test_holodeck_fixture_object_count():
    path = FIXTURES / "holodeck" / "holodeck_export.json"
    doc = json.loads(path.read_text("utf-8"))
    # independent count straight off the raw export
    expected = len(doc["objects"])
    g = convert_holodeck(doc)
    assert len(g.objects) == expected
    assert validate_scene(g).ok


def test_serialize_deterministic():
    g = parse_scene(json.dumps(MINIMAL))
    assert serialize_scene(g) == serialize_scene(g)


def test_roundtrip_identity_over_corpus():
    for path in fixture_scene_paths():
        g = parse_scene(path.read_bytes())
        again = parse_scene(serialize_scene(g))
        assert again == g, path
        assert serialize_scene(again) == serialize_scene(g)


def test_yaw_normalized_on_parse():
    doc = json.loads(json.dumps(MINIMAL))
    doc["objects"] = [
        {
            "id": "b",
            "class_label": "box",
            "position": [1.0, 0.5, 1.0],
            "yaw": 360.0,
            "dims": [0.5, 1.0, 0.5],
            "movable": True,
        }
    ]
    g = parse_scene(json.dumps(doc))
    assert g.objects[0].yaw == 0.0
    assert b'"yaw": 0.0' in serialize_scene(g)


def test_negative_yaw_normalized():
    obj = make_box("b", 1, 1, yaw=-90.0)
    assert obj.yaw == 270.0


def test_validate_clean_fixture_is_empty(bedroom):
    assert validate_scene(bedroom).ok


def test_validate_door_off_wall():
    room = Room(
        floor_polygon=((0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0)),
        height=2.5,
        doors=(Door("d0", 0, (14.0, 0.0), 1.0),),
    )
    report = validate_scene(SceneGraph(room=room))
    assert "DOOR_OFF_WALL" in report.codes()


def test_validate_nonpositive_dims():
    g = simple_scene([make_box("b", 1, 1, w=0.0)])
    report = validate_scene(g)
    assert "NONPOSITIVE_DIMS" in report.codes()


def test_validate_unknown_exit():
    g = simple_scene([], exits=("ghost",))
    assert "UNKNOWN_EXIT" in validate_scene(g).codes()


def test_validate_non_simple_polygon():
    room = Room(
        floor_polygon=((0.0, 0.0), (4.0, 3.0), (4.0, 0.0), (0.0, 3.0)),
        height=2.5,
    )
    assert "POLYGON_NOT_SIMPLE" in validate_scene(SceneGraph(room=room)).codes()


def test_validate_clockwise_polygon():
    room = Room(
        floor_polygon=((0.0, 0.0), (0.0, 3.0), (4.0, 3.0), (4.0, 0.0)),
        height=2.5,
    )
    assert "POLYGON_NOT_CCW" in validate_scene(SceneGraph(room=room)).codes()


def test_validate_mutations_one_invariant_at_a_time(bedroom):
    # each single mutation trips exactly its own invariant
    g = bedroom
    bad_exit = SceneGraph(g.room, g.objects, g.exits + ("nope",))
    assert validate_scene(bad_exit).codes() == ["UNKNOWN_EXIT"]

    dup = SceneGraph(g.room, g.objects + (g.objects[0],), g.exits)
    assert validate_scene(dup).codes() == ["DUPLICATE_OBJECT_ID"]

    short_room = Room(g.room.floor_polygon[:2], g.room.height)
    assert validate_scene(SceneGraph(short_room)).codes() == [
        "POLYGON_TOO_FEW_VERTICES"
    ]


def test_mass_class_threshold():
    small = make_box("s", 1, 1, w=0.7, d=0.7)  # 0.49 m^2
    large = make_box("l", 1, 1, w=1.0, d=0.5)  # 0.50 m^2
    assert small.mass_class == "small"
    assert large.mass_class == "large"
