"""Interactive scene-editing environment.

Applies move/rotate/delete actions under a collision-mode toggle,
returns structured accept/reject outcomes (never raises for invalid
moves, so the agent loop stays alive), and records a hash-chained
episode log that replays exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum

from . import geometry
from .scene import SceneGraph, SceneObject, normalize_yaw, serialize_scene


class Operation(str, Enum):
    MOVE = "move"
    ROTATE = "rotate"
    DELETE = "delete"


class Reason(str, Enum):
    OK = "ok"
    COLLISION = "collision"
    OUT_OF_BOUNDS = "out_of_bounds"
    UNKNOWN_OBJECT = "unknown_object"
    IMMOVABLE = "immovable"


class HashMismatch(Exception):
    def __init__(self, step: int, expected: str, actual: str):
        super().__init__(f"replay diverged at step {step}: expected {expected}, got {actual}")
        self.step = step
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True)
class Action:
    """The agent action tuple: (object_id, operation, parameters).

    move carries an absolute target position, rotate a target yaw in
    degrees, delete nothing.
    """

    object_id: str
    operation: Operation
    position: tuple[float, float, float] | None = None
    yaw: float | None = None

    def __post_init__(self):
        if self.operation == Operation.MOVE:
            if self.position is None or self.yaw is not None:
                raise ValueError("move takes exactly a target position")
            object.__setattr__(
                self, "position", tuple(float(v) for v in self.position)
            )
        elif self.operation == Operation.ROTATE:
            if self.yaw is None or self.position is not None:
                raise ValueError("rotate takes exactly a target yaw")
            object.__setattr__(self, "yaw", float(self.yaw))
        elif self.operation == Operation.DELETE:
            if self.position is not None or self.yaw is not None:
                raise ValueError("delete takes no parameters")

    def to_json(self) -> dict:
        params: dict = {}
        if self.operation == Operation.MOVE:
            params["position"] = list(self.position)
        elif self.operation == Operation.ROTATE:
            params["yaw"] = self.yaw
        return {
            "object_id": self.object_id,
            "operation": self.operation.value,
            "parameters": params,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Action":
        if not isinstance(d, dict):
            raise ValueError(f"action must be an object, got {type(d).__name__}")
        try:
            op = Operation(d["operation"])
        except (KeyError, ValueError):
            raise ValueError(f"bad operation: {d.get('operation')!r}") from None
        object_id = d.get("object_id")
        if not isinstance(object_id, str) or not object_id:
            raise ValueError("object_id must be a non-empty string")
        params = d.get("parameters") or {}
        if not isinstance(params, dict):
            raise ValueError("parameters must be an object")
        if op == Operation.MOVE:
            pos = params.get("position")
            if not isinstance(pos, (list, tuple)) or len(pos) != 3:
                raise ValueError("move needs parameters.position = [x, y, z]")
            return cls(object_id, op, position=tuple(float(v) for v in pos))
        if op == Operation.ROTATE:
            yaw = params.get("yaw")
            if not isinstance(yaw, (int, float)) or isinstance(yaw, bool):
                raise ValueError("rotate needs numeric parameters.yaw")
            return cls(object_id, op, yaw=float(yaw))
        if params:
            raise ValueError("delete takes no parameters")
        return cls(object_id, op)


@dataclass(frozen=True)
class ActionOutcome:
    accepted: bool
    reason: Reason
    colliding_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.accepted != (self.reason == Reason.OK):
            raise ValueError("accepted must hold exactly when reason is ok")
        object.__setattr__(self, "colliding_ids", tuple(self.colliding_ids))

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "reason": self.reason.value,
            "colliding_ids": list(self.colliding_ids),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ActionOutcome":
        return cls(
            accepted=bool(d["accepted"]),
            reason=Reason(d["reason"]),
            colliding_ids=tuple(d.get("colliding_ids", [])),
        )


@dataclass(frozen=True)
class EnvConfig:
    collision_checking: bool = True
    eps: float = geometry.DEFAULT_EPS
    keep_in_room: bool = True

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be non-negative")

    def to_json(self) -> dict:
        return {
            "collision_checking": self.collision_checking,
            "eps": self.eps,
            "keep_in_room": self.keep_in_room,
        }

    @classmethod
    def from_json(cls, d: dict) -> "EnvConfig":
        return cls(
            collision_checking=bool(d["collision_checking"]),
            eps=float(d["eps"]),
            keep_in_room=bool(d["keep_in_room"]),
        )


@dataclass
class LogEntry:
    step: int
    action: Action
    outcome: ActionOutcome
    post_hash: str
    round: int = 0

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "action": self.action.to_json(),
            "outcome": self.outcome.to_json(),
            "post_hash": self.post_hash,
            "round": self.round,
        }

    @classmethod
    def from_json(cls, d: dict) -> "LogEntry":
        return cls(
            step=int(d["step"]),
            action=Action.from_json(d["action"]),
            outcome=ActionOutcome.from_json(d["outcome"]),
            post_hash=str(d["post_hash"]),
            round=int(d.get("round", 0)),
        )


@dataclass
class EpisodeLog:
    """Append-only, hash-chained action record enabling exact replay.

    Serialized as JSON Lines: a header record then one line per entry.
    """

    initial_scene_hash: str
    rng_seed: int = 0
    config: EnvConfig = field(default_factory=EnvConfig)
    meta: dict = field(default_factory=dict)
    entries: list[LogEntry] = field(default_factory=list)

    def append(self, entry: LogEntry) -> None:
        self.entries.append(entry)

    @property
    def final_hash(self) -> str:
        return self.entries[-1].post_hash if self.entries else self.initial_scene_hash

    def max_round(self) -> int:
        return max((e.round for e in self.entries), default=0)

    def to_jsonl(self) -> str:
        header = {
            "initial_scene_hash": self.initial_scene_hash,
            "rng_seed": self.rng_seed,
            "config": self.config.to_json(),
            "meta": self.meta,
        }
        lines = [json.dumps(header, ensure_ascii=False)]
        lines.extend(json.dumps(e.to_json(), ensure_ascii=False) for e in self.entries)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty episode log")
        header = json.loads(lines[0])
        log = cls(
            initial_scene_hash=str(header["initial_scene_hash"]),
            rng_seed=int(header.get("rng_seed", 0)),
            config=EnvConfig.from_json(header["config"]),
            meta=dict(header.get("meta", {})),
        )
        for ln in lines[1:]:
            log.append(LogEntry.from_json(json.loads(ln)))
        return log


def scene_hash(g: SceneGraph) -> str:
    """64-bit-truncated SHA-256 of the canonical serialization."""
    return hashlib.sha256(serialize_scene(g)).hexdigest()[:16]


def apply_action(g: SceneGraph, a: Action, cfg: EnvConfig) -> tuple[SceneGraph, ActionOutcome]:
    """Apply one action; rejections return the scene unchanged together
    with the reason, never an exception."""
    try:
        obj = g.get_object(a.object_id)
    except KeyError:
        return g, ActionOutcome(False, Reason.UNKNOWN_OBJECT)

    if a.operation == Operation.DELETE:
        return g.without_object(a.object_id), ActionOutcome(True, Reason.OK)

    if not obj.movable:
        return g, ActionOutcome(False, Reason.IMMOVABLE)

    if a.operation == Operation.MOVE:
        candidate = replace(obj, position=a.position)
    else:
        candidate = replace(obj, yaw=normalize_yaw(a.yaw))

    box = geometry.world_aabb(candidate)
    if cfg.keep_in_room and not geometry.rect_in_polygon(
        box.footprint(), g.room.floor_polygon
    ):
        return g, ActionOutcome(False, Reason.OUT_OF_BOUNDS)

    if cfg.collision_checking:
        colliding = sorted(
            o.id
            for o in g.objects
            if o.id != a.object_id
            and geometry.aabb_overlap(box, geometry.world_aabb(o), cfg.eps)
        )
        if colliding:
            return g, ActionOutcome(False, Reason.COLLISION, tuple(colliding))

    return g.with_object_replaced(candidate), ActionOutcome(True, Reason.OK)


def replay(g0: SceneGraph, log: EpisodeLog, cfg: EnvConfig | None = None) -> SceneGraph:
    """Re-execute a log from the initial scene, verifying the hash chain.

    Raises HashMismatch at the first diverging step. The header's config
    is used unless one is passed explicitly (replaying under a different
    config surfaces as a mismatch at the first affected step).
    """
    cfg = cfg if cfg is not None else log.config
    actual = scene_hash(g0)
    if actual != log.initial_scene_hash:
        raise HashMismatch(0, log.initial_scene_hash, actual)
    scene = g0
    for entry in log.entries:
        scene, _ = apply_action(scene, entry.action, cfg)
        actual = scene_hash(scene)
        if actual != entry.post_hash:
            raise HashMismatch(entry.step, entry.post_hash, actual)
    return scene


def moved_positions(g0: SceneGraph, log: EpisodeLog) -> dict[str, list[tuple[int, tuple[float, float, float]]]]:
    """Per-object accepted move targets, as (step, position) lists.

    Used by the trajectory renderer; replays internally so the result
    only reflects accepted actions.
    """
    replay(g0, log)  # raises on a corrupt log
    trails: dict[str, list[tuple[int, tuple[float, float, float]]]] = {}
    for entry in log.entries:
        if entry.outcome.accepted and entry.action.operation == Operation.MOVE:
            trails.setdefault(entry.action.object_id, []).append(
                (entry.step, entry.action.position)
            )
    return trails
