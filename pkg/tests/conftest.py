from __future__ import annotations

import random
from pathlib import Path

import pytest

from sceneloop.scene import Door, Room, SceneGraph, SceneObject

FIXTURES = Path(__file__).parent / "fixtures"
SCENES = FIXTURES / "scenes"
TRANSCRIPTS = FIXTURES / "transcripts"

GOAL_TEMPLATE = "A {room_type}, where doors are blocked with large objects."


def make_box(object_id, x, z, w=1.0, d=1.0, h=1.0, y=None, yaw=0.0, movable=True, label="box"):
    return SceneObject(
        id=object_id,
        class_label=label,
        position=(x, h / 2 if y is None else y, z),
        yaw=yaw,
        dims=(w, h, d),
        movable=movable,
    )


def rect_room(width=5.0, depth=4.0, height=2.5, doors=(), windows=()):
    return Room(
        floor_polygon=((0.0, 0.0), (width, 0.0), (width, depth), (0.0, depth)),
        height=height,
        doors=tuple(doors),
        windows=tuple(windows),
    )


def simple_scene(objects=(), width=5.0, depth=4.0, doors=None, exits=None):
    if doors is None:
        doors = (Door("door_0", 0, (width / 2, 0.0), 1.0),)
    if exits is None:
        exits = tuple(d.id for d in doors)
    return SceneGraph(
        room=rect_room(width, depth, doors=doors),
        objects=tuple(objects),
        exits=tuple(exits),
    )


def random_scene(rng: random.Random, max_objects=50):
    width = rng.uniform(4.0, 10.0)
    depth = rng.uniform(4.0, 10.0)
    n = rng.randint(0, max_objects)
    objects = []
    for i in range(n):
        objects.append(
            make_box(
                f"obj_{i}",
                x=rng.uniform(0.0, width),
                z=rng.uniform(0.0, depth),
                w=rng.uniform(0.2, 2.0),
                d=rng.uniform(0.2, 2.0),
                h=rng.uniform(0.2, 2.0),
                y=rng.uniform(0.1, 2.0),
                yaw=rng.uniform(0.0, 360.0),
            )
        )
    return simple_scene(objects, width=width, depth=depth)


@pytest.fixture
def bedroom():
    from sceneloop.scene import parse_scene

    return parse_scene((SCENES / "bedroom.json").read_bytes())


def fixture_scene_paths():
    return sorted(SCENES.glob("*.json"))
