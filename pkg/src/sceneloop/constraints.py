"""Goal-derived constraint compilation and scene evaluation.

A goal string plus the initial scene compile deterministically into a
typed constraint set spanning four domains (collision, spatial, safety,
goal). Evaluation produces a signed margin per constraint: positive is
slack, negative is violation magnitude. The JSON encoding is documented
in ``docs/constraint-schema.md``.
"""

from __future__ import annotations

import heapq
import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import ndimage

from . import geometry
from .scene import SceneGraph

CONSTRAINT_SCHEMA_VERSION = "1"


class UnrecognizedGoal(Exception):
    pass


class DanglingReference(KeyError):
    """A constraint names a door or object missing from the scene."""


class Domain(str, Enum):
    COLLISION = "collision"
    SPATIAL = "spatial"
    SAFETY = "safety"
    GOAL = "goal"


class Kind(str, Enum):
    NO_OVERLAP = "no_overlap"
    MIN_CLEARANCE = "min_clearance"
    GRID_ALIGNMENT = "grid_alignment"
    PROXIMITY = "proximity"
    EXIT_UNOBSTRUCTED = "exit_unobstructed"
    DOOR_BLOCKED_BY_LARGE = "door_blocked_by_large"
    CUSTOM = "custom"


class Severity(str, Enum):
    HARD = "hard"
    SOFT = "soft"


# custom may appear under any domain
_KIND_DOMAIN = {
    Kind.NO_OVERLAP: Domain.COLLISION,
    Kind.MIN_CLEARANCE: Domain.SPATIAL,
    Kind.GRID_ALIGNMENT: Domain.SPATIAL,
    Kind.PROXIMITY: Domain.SPATIAL,
    Kind.EXIT_UNOBSTRUCTED: Domain.SAFETY,
    Kind.DOOR_BLOCKED_BY_LARGE: Domain.GOAL,
}

_REQUIRED_PARAMS = {
    Kind.NO_OVERLAP: set(),
    Kind.MIN_CLEARANCE: {"threshold"},
    Kind.GRID_ALIGNMENT: {"pitch", "tolerance"},
    Kind.PROXIMITY: {"a_id", "b_id", "max_distance"},
    Kind.EXIT_UNOBSTRUCTED: {"door_id"},
    Kind.DOOR_BLOCKED_BY_LARGE: {"door_id", "large_object_threshold", "required_coverage"},
    Kind.CUSTOM: {"name"},
}


@dataclass(frozen=True)
class Constraint:
    id: str
    domain: Domain
    kind: Kind
    params: dict
    severity: Severity

    def __post_init__(self):
        expected = _KIND_DOMAIN.get(self.kind)
        if expected is not None and expected != self.domain:
            raise ValueError(
                f"kind {self.kind.value} belongs to domain {expected.value}, "
                f"not {self.domain.value}"
            )
        missing = _REQUIRED_PARAMS[self.kind] - set(self.params)
        if missing:
            raise ValueError(f"constraint {self.id!r} missing params: {sorted(missing)}")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain.value,
            "kind": self.kind.value,
            "params": dict(sorted(self.params.items())),
            "severity": self.severity.value,
        }


@dataclass(frozen=True)
class ConstraintSet:
    goal_text: str
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        ids = [c.id for c in self.constraints]
        if len(ids) != len(set(ids)):
            raise ValueError("constraint ids must be unique")

    def hard(self) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if c.severity == Severity.HARD)

    def to_json(self) -> dict:
        return {
            "schema_version": CONSTRAINT_SCHEMA_VERSION,
            "goal_text": self.goal_text,
            "constraints": [c.to_json() for c in self.constraints],
        }

    def serialize(self) -> bytes:
        return (json.dumps(self.to_json(), ensure_ascii=False, indent=2) + "\n").encode("utf-8")


@dataclass
class ConstraintResult:
    id: str
    satisfied: bool
    margin: float
    detail: str
    severity: Severity

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "detail": self.detail,
            "severity": self.severity.value,
        }


@dataclass
class ConstraintReport:
    results: list[ConstraintResult] = field(default_factory=list)

    @property
    def overall_hard_ok(self) -> bool:
        return all(r.satisfied for r in self.results if r.severity == Severity.HARD)

    def result(self, constraint_id: str) -> ConstraintResult:
        for r in self.results:
            if r.id == constraint_id:
                return r
        raise KeyError(constraint_id)

    def to_json(self) -> dict:
        return {
            "overall_hard_ok": self.overall_hard_ok,
            "constraints": [r.to_json() for r in self.results],
        }

    def summary(self) -> str:
        failed = [r.id for r in self.results if not r.satisfied]
        status = "OK" if self.overall_hard_ok else "HARD VIOLATIONS"
        return f"{status}; unsatisfied: {failed or 'none'}"


@dataclass
class CompileConfig:
    clearance: float = 0.25
    large_object_threshold: float = 0.5
    required_coverage: float = 0.0
    preserve_secondary: bool = False
    # When collision checking is disabled in the environment the
    # no_overlap constraint compiles as soft: intentional interpenetration
    # must not fail the episode.
    collision_enforced: bool = True
    grid_pitch: float | None = None
    grid_tolerance: float = 0.05
    enrichment: Callable[[str, SceneGraph], list[Constraint]] | None = None


@dataclass
class GeometryParams:
    eps: float = geometry.DEFAULT_EPS
    cell_size: float = 0.05
    door_depth: float = geometry.DEFAULT_DOOR_DEPTH
    clearance_radius: float = geometry.DEFAULT_CLEARANCE_RADIUS
    raster: float = geometry.DEFAULT_RASTER


_BLOCKED_DOORS = re.compile(r"(?i)\bdoors?\b.*\bblocked\b.*\blarge\s+objects?\b")


def compile_constraints(goal_text: str, g0: SceneGraph, cfg: CompileConfig | None = None) -> ConstraintSet:
    """Deterministically expand the template library for the goal.

    Always emits no_overlap, min_clearance, and an in-bounds safety
    constraint; the blocked-doors goal family adds one hard
    door_blocked_by_large per targeted door plus exit_unobstructed for
    each non-targeted exit. An enrichment hook may append soft
    constraints but can never remove or weaken template ones.
    """
    cfg = cfg or CompileConfig()
    constraints: list[Constraint] = [
        Constraint(
            id="no_overlap",
            domain=Domain.COLLISION,
            kind=Kind.NO_OVERLAP,
            params={},
            severity=Severity.HARD if cfg.collision_enforced else Severity.SOFT,
        ),
        Constraint(
            id="min_clearance",
            domain=Domain.SPATIAL,
            kind=Kind.MIN_CLEARANCE,
            params={"threshold": cfg.clearance},
            severity=Severity.SOFT,
        ),
        Constraint(
            id="in_bounds",
            domain=Domain.SAFETY,
            kind=Kind.CUSTOM,
            params={"name": "in_bounds"},
            severity=Severity.HARD,
        ),
    ]
    if cfg.grid_pitch is not None:
        constraints.append(
            Constraint(
                id="grid_alignment",
                domain=Domain.SPATIAL,
                kind=Kind.GRID_ALIGNMENT,
                params={"pitch": cfg.grid_pitch, "tolerance": cfg.grid_tolerance},
                severity=Severity.SOFT,
            )
        )

    matched = False
    if _BLOCKED_DOORS.search(goal_text):
        matched = True
        doors = list(g0.room.doors)
        targeted = list(doors)
        if cfg.preserve_secondary and len(doors) >= 2:
            centroid = geometry.polygon_centroid(g0.room.floor_polygon)
            nearest = min(
                doors,
                key=lambda d: math.hypot(d.center[0] - centroid[0], d.center[1] - centroid[1]),
            )
            targeted = [d for d in doors if d.id != nearest.id]
        targeted_ids = {d.id for d in targeted}
        for d in targeted:
            constraints.append(
                Constraint(
                    id=f"door_blocked_by_large:{d.id}",
                    domain=Domain.GOAL,
                    kind=Kind.DOOR_BLOCKED_BY_LARGE,
                    params={
                        "door_id": d.id,
                        "large_object_threshold": cfg.large_object_threshold,
                        "required_coverage": cfg.required_coverage,
                    },
                    severity=Severity.HARD,
                )
            )
        for exit_id in g0.exits:
            if exit_id not in targeted_ids:
                constraints.append(
                    Constraint(
                        id=f"exit_unobstructed:{exit_id}",
                        domain=Domain.SAFETY,
                        kind=Kind.EXIT_UNOBSTRUCTED,
                        params={"door_id": exit_id},
                        severity=Severity.HARD,
                    )
                )

    if not matched and cfg.enrichment is None:
        raise UnrecognizedGoal(f"no constraint template matches goal: {goal_text!r}")

    if cfg.enrichment is not None:
        existing = {c.id for c in constraints}
        for extra in cfg.enrichment(goal_text, g0):
            if extra.severity != Severity.SOFT:
                raise ValueError("enrichment may only add soft constraints")
            if extra.id in existing:
                raise ValueError(f"enrichment reuses constraint id {extra.id!r}")
            existing.add(extra.id)
            constraints.append(extra)

    domains = {c.domain for c in constraints}
    if Domain.GOAL not in domains:
        raise UnrecognizedGoal(
            f"goal {goal_text!r} produced no goal-domain constraint"
        )
    return ConstraintSet(goal_text=goal_text, constraints=tuple(constraints))


# ---------------------------------------------------------------------------
# Evaluation


def _bottleneck_clearance(free_dist: np.ndarray, start, goal) -> float:
    """Widest-path value between two cells: the maximum over paths of the
    minimum clearance along the path (4-connected)."""
    nz, nx = free_dist.shape
    best = np.full(free_dist.shape, -1.0)
    sv = float(free_dist[start])
    if sv <= 0:
        return 0.0
    best[start] = sv
    heap = [(-sv, start)]
    while heap:
        neg, cell = heapq.heappop(heap)
        value = -neg
        if cell == goal:
            return value
        if value < best[cell]:
            continue
        iz, ix = cell
        for dz, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nz2, nx2 = iz + dz, ix + dx
            if 0 <= nz2 < nz and 0 <= nx2 < nx:
                cand = min(value, float(free_dist[nz2, nx2]))
                if cand > best[nz2, nx2] and cand > 0:
                    best[nz2, nx2] = cand
                    heapq.heappush(heap, (-cand, (nz2, nx2)))
    return max(0.0, float(best[goal]))


def _clearance_margin(g: SceneGraph, threshold: float, geo: GeometryParams) -> tuple[float, str]:
    """Navigable-area clearance: the tightest bottleneck on the widest
    route from the room centroid to each door's approach point, minus the
    threshold. Door-less rooms fall back to the widest free disc."""
    grid = geometry.occupancy_grid(g, geo.cell_size)
    dist = ndimage.distance_transform_edt(~grid.cells) * geo.cell_size
    if not g.room.doors:
        margin = float(dist.max()) - threshold
        return margin, f"max free clearance {dist.max():.3f} m"
    centroid = geometry.polygon_centroid(g.room.floor_polygon)
    if not grid.contains_point(centroid):
        return -threshold, "room centroid outside grid"
    start = grid.cell_of(centroid)
    worst = math.inf
    worst_door = ""
    for d in g.room.doors:
        target = geometry.door_approach_point(g.room, d, geo.door_depth)
        if not grid.contains_point(target):
            bottleneck = 0.0
        else:
            bottleneck = _bottleneck_clearance(dist, start, grid.cell_of(target))
        if bottleneck < worst:
            worst, worst_door = bottleneck, d.id
    return worst - threshold, f"tightest route bottleneck {worst:.3f} m (door {worst_door})"


def _eval_no_overlap(g: SceneGraph, geo: GeometryParams) -> tuple[float, str]:
    pairs = geometry.pairwise_collisions(g, geo.eps)
    if not pairs:
        return 1.0, "no colliding pairs"
    return -float(len(pairs)), f"colliding pairs: {pairs}"


def _eval_grid_alignment(g: SceneGraph, pitch: float, tolerance: float) -> tuple[float, str]:
    worst = 0.0
    for o in g.objects:
        for v in (o.position[0], o.position[2]):
            rem = math.fmod(v, pitch)
            if rem < 0:
                rem += pitch
            worst = max(worst, min(rem, pitch - rem))
    return tolerance - worst, f"max lattice deviation {worst:.4f} m"


def _eval_proximity(g: SceneGraph, params: dict) -> tuple[float, str]:
    try:
        a = g.get_object(params["a_id"])
        b = g.get_object(params["b_id"])
    except KeyError as e:
        raise DanglingReference(str(e)) from None
    dist = math.hypot(
        a.position[0] - b.position[0], a.position[2] - b.position[2]
    )
    return params["max_distance"] - dist, f"distance {dist:.3f} m"


def _eval_exit_unobstructed(g: SceneGraph, params: dict, geo: GeometryParams) -> tuple[float, str]:
    try:
        door = g.room.door(params["door_id"])
    except KeyError:
        raise DanglingReference(params["door_id"]) from None
    grid = geometry.occupancy_grid(g, geo.cell_size)
    centroid = geometry.polygon_centroid(g.room.floor_polygon)
    target = geometry.door_approach_point(g.room, door, geo.door_depth)
    try:
        ok = geometry.path_exists(grid, centroid, target, geo.clearance_radius)
    except ValueError:
        ok = False
    return (1.0 if ok else -1.0), (
        f"path centroid->door {door.id} at clearance {geo.clearance_radius}: "
        f"{'exists' if ok else 'none'}"
    )


def _eval_door_blocked_by_large(g: SceneGraph, params: dict, geo: GeometryParams) -> tuple[float, str]:
    door_id = params["door_id"]
    threshold = params["large_object_threshold"]
    required = params["required_coverage"]
    try:
        blockage = geometry.door_blocked(
            g, door_id, geo.door_depth, geo.clearance_radius, geo.raster
        )
    except geometry.UnknownDoor:
        raise DanglingReference(door_id) from None

    large = tuple(o for o in g.objects if o.footprint_area >= threshold)
    large_present = False
    if large:
        trimmed = SceneGraph(g.room, large, g.exits, g.schema_version)
        occupied, _, _ = geometry._region_raster(
            trimmed, g.room.door(door_id), geo.door_depth, geo.raster
        )
        large_present = bool(occupied.any())

    if blockage.blocked and large_present:
        margin = blockage.coverage - required
    else:
        margin = -(1.0 - blockage.coverage) - (0.0 if large_present else 1.0)
    detail = (
        f"coverage={blockage.coverage:.3f} passable={blockage.passable} "
        f"large_object_in_region={large_present}"
    )
    return margin, detail


def _eval_in_bounds(g: SceneGraph) -> tuple[float, str]:
    outside = [
        o.id
        for o in g.objects
        if not geometry.rect_in_polygon(
            geometry.world_aabb(o).footprint(), g.room.floor_polygon
        )
    ]
    if not outside:
        return 1.0, "all object footprints inside the floor polygon"
    return -float(len(outside)), f"outside room: {outside}"


def evaluate(cs: ConstraintSet, g: SceneGraph, geo: GeometryParams | None = None) -> ConstraintReport:
    """Evaluate every constraint against the scene.

    Raises DanglingReference when a constraint names a missing door or
    object. Satisfaction is margin >= 0 for all kinds.
    """
    geo = geo or GeometryParams()
    report = ConstraintReport()
    for c in cs.constraints:
        if c.kind == Kind.NO_OVERLAP:
            margin, detail = _eval_no_overlap(g, geo)
        elif c.kind == Kind.MIN_CLEARANCE:
            margin, detail = _clearance_margin(g, c.params["threshold"], geo)
        elif c.kind == Kind.GRID_ALIGNMENT:
            margin, detail = _eval_grid_alignment(
                g, c.params["pitch"], c.params["tolerance"]
            )
        elif c.kind == Kind.PROXIMITY:
            margin, detail = _eval_proximity(g, c.params)
        elif c.kind == Kind.EXIT_UNOBSTRUCTED:
            margin, detail = _eval_exit_unobstructed(g, c.params, geo)
        elif c.kind == Kind.DOOR_BLOCKED_BY_LARGE:
            margin, detail = _eval_door_blocked_by_large(g, c.params, geo)
        elif c.kind == Kind.CUSTOM:
            name = c.params["name"]
            if name == "in_bounds":
                margin, detail = _eval_in_bounds(g)
            else:
                raise ValueError(f"unknown custom constraint {name!r}")
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown kind {c.kind}")
        report.results.append(
            ConstraintResult(
                id=c.id,
                satisfied=margin >= 0,
                margin=float(margin),
                detail=detail,
                severity=c.severity,
            )
        )
    return report
