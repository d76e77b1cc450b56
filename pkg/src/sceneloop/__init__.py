"""sceneloop: dual-agent indoor scene editing with collision-aware
validation, schematic rendering, dataset export, and a blinded A/B
evaluation harness."""

from .scene import (
    Door,
    Room,
    SceneGraph,
    SceneObject,
    Window,
    parse_scene,
    serialize_scene,
    validate_scene,
)
from .geometry import (
    AABB,
    BlockageResult,
    OccupancyGrid,
    aabb_overlap,
    door_access_region,
    door_blocked,
    occupancy_grid,
    pairwise_collisions,
    path_exists,
    world_aabb,
)
from .constraints import (
    CompileConfig,
    Constraint,
    ConstraintReport,
    ConstraintSet,
    GeometryParams,
    compile_constraints,
    evaluate,
)
from .editenv import (
    Action,
    ActionOutcome,
    EnvConfig,
    EpisodeLog,
    Operation,
    apply_action,
    replay,
    scene_hash,
)
from .agents import (
    AgentEndpoint,
    AgentEndpoints,
    ContextBundle,
    LoopConfig,
    Plan,
    request_action,
    request_plan,
    run_episode,
)
from .render import RenderOptions, render_occupancy, render_topdown, render_trajectory

__version__ = "0.1.0"

__all__ = [
    "AABB",
    "Action",
    "ActionOutcome",
    "AgentEndpoint",
    "AgentEndpoints",
    "BlockageResult",
    "CompileConfig",
    "Constraint",
    "ConstraintReport",
    "ConstraintSet",
    "ContextBundle",
    "Door",
    "EnvConfig",
    "EpisodeLog",
    "GeometryParams",
    "LoopConfig",
    "OccupancyGrid",
    "Operation",
    "Plan",
    "RenderOptions",
    "Room",
    "SceneGraph",
    "SceneObject",
    "Window",
    "aabb_overlap",
    "apply_action",
    "compile_constraints",
    "door_access_region",
    "door_blocked",
    "evaluate",
    "occupancy_grid",
    "pairwise_collisions",
    "parse_scene",
    "path_exists",
    "render_occupancy",
    "render_topdown",
    "render_trajectory",
    "replay",
    "request_action",
    "request_plan",
    "run_episode",
    "scene_hash",
    "serialize_scene",
    "validate_scene",
    "world_aabb",
]
