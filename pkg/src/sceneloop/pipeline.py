"""Batch pipeline: run the editing loop over a directory of scenes and
export the resulting dataset (final scenes, episode logs, constraint
reports, schematic renders, object metadata) under a single manifest.

Scene files are named ``<room_type>.json``; the goal template's
``{room_type}`` placeholder is filled from the file stem (underscores
become spaces). Episodes are isolated: one failure never aborts the
batch. The manifest is written last via write-temp-then-rename so an
interrupted run leaves no partial manifest.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import geometry, render
from .agents import (
    AgentEndpoint,
    AgentEndpoints,
    EpisodeFailed,
    LoopConfig,
    Role,
    TransportError,
    run_episode,
)
from .constraints import CompileConfig, GeometryParams
from .editenv import EnvConfig
from .scene import SceneError, SceneGraph, parse_scene, serialize_scene

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    scenes_dir: str | Path
    goal_template: str
    out_dir: str | Path
    collision_checking: bool = True
    jobs: int = 1
    seed: int = 0
    mock_evaluator: str | Path | None = None
    mock_editor: str | Path | None = None
    endpoint_config: str | Path | None = None
    env: EnvConfig | None = None
    loop: LoopConfig | None = None
    compile_cfg: CompileConfig | None = None
    geo: GeometryParams = field(default_factory=GeometryParams)

    def validate(self) -> None:
        if not Path(self.scenes_dir).is_dir():
            raise ConfigError(f"scenes directory not found: {self.scenes_dir}")
        if "{room_type}" not in self.goal_template:
            raise ConfigError("goal template must contain the {room_type} placeholder")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mock_evaluator is None and self.mock_editor is None and self.endpoint_config is None:
            raise ConfigError(
                "agents unconfigured: pass mock transcripts or an endpoint config"
            )


@dataclass
class DatasetManifest:
    goal_template: str
    seed: int
    collision_checking: bool
    records: list[dict] = field(default_factory=list)
    generated_at: str = ""

    def to_json(self) -> dict:
        return {
            "goal_template": self.goal_template,
            "seed": self.seed,
            "collision_checking": self.collision_checking,
            "records": self.records,
            "generated_at": self.generated_at,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DatasetManifest":
        return cls(
            goal_template=d["goal_template"],
            seed=int(d["seed"]),
            collision_checking=bool(d["collision_checking"]),
            records=list(d["records"]),
            generated_at=str(d.get("generated_at", "")),
        )


def export_metadata(g: SceneGraph) -> list[dict]:
    """One record per object: id, class label, pose, and world AABB."""
    out = []
    for o in g.objects:
        box = geometry.world_aabb(o)
        out.append(
            {
                "id": o.id,
                "class_label": o.class_label,
                "position": list(o.position),
                "yaw": o.yaw,
                "dims": list(o.dims),
                "mass_class": o.mass_class,
                "aabb": {"min": list(box.min), "max": list(box.max)},
            }
        )
    return out


def _resolve_mock(path: str | Path, room_type: str) -> Path:
    """A mock path may be a single transcript file (shared by every
    scene) or a directory holding <room_type>/<role>.jsonl."""
    p = Path(path)
    if p.is_file():
        return p
    raise ConfigError(f"mock transcript not found: {p}")


def _endpoints_for(cfg: PipelineConfig, room_type: str) -> AgentEndpoints:
    if cfg.endpoint_config is not None:
        doc = json.loads(Path(cfg.endpoint_config).read_text("utf-8"))
        return AgentEndpoints(
            evaluator=AgentEndpoint.from_json(Role.EVALUATOR, doc["evaluator"]),
            editor=AgentEndpoint.from_json(Role.EDITOR, doc["editor"]),
        )

    def pick(base: str | Path | None, role: str) -> Path:
        if base is None:
            raise ConfigError(f"no transcript configured for the {role} agent")
        p = Path(base)
        if p.is_dir():
            p = p / room_type / f"{role}.jsonl"
        return _resolve_mock(p, room_type)

    return AgentEndpoints(
        evaluator=AgentEndpoint(
            role=Role.EVALUATOR, mock_path=pick(cfg.mock_evaluator, "evaluator")
        ),
        editor=AgentEndpoint(
            role=Role.EDITOR, mock_path=pick(cfg.mock_editor, "editor")
        ),
    )


def _run_one(cfg: PipelineConfig, scene_path: Path, out_root: Path) -> dict:
    room_type = scene_path.stem
    goal = cfg.goal_template.format(room_type=room_type.replace("_", " "))
    scene_dir = out_root / room_type
    scene_dir.mkdir(parents=True, exist_ok=True)

    record: dict = {
        "room_type": room_type,
        "goal": goal,
        "initial_scene": str(scene_path),
        "status": "failed",
    }
    try:
        g0 = parse_scene(scene_path.read_bytes())
        endpoints = _endpoints_for(cfg, room_type)
        env = cfg.env or EnvConfig(collision_checking=cfg.collision_checking)
        loop = cfg.loop or LoopConfig(collision_checking=cfg.collision_checking)

        initial_svg = scene_dir / "initial.svg"
        initial_svg.write_text(render.render_topdown(g0), encoding="utf-8")

        final, log, report = run_episode(
            g0,
            goal,
            endpoints,
            loop,
            env=env,
            compile_cfg=cfg.compile_cfg,
            geo=cfg.geo,
            workdir=scene_dir / "views",
            rng_seed=cfg.seed,
        )
        record["status"] = "ok"
    except EpisodeFailed as e:
        final, log, report = e.scene, e.log, e.report
        record["error"] = str(e)
    except (SceneError, TransportError, ConfigError, ValueError) as e:
        logger.warning("scene %s failed: %s", room_type, e)
        record["error"] = f"{type(e).__name__}: {e}"
        return record
    except Exception as e:  # agent output failures must not kill the batch
        logger.warning("scene %s failed unexpectedly: %s", room_type, e)
        record["error"] = f"{type(e).__name__}: {e}"
        return record

    final_path = scene_dir / "final.json"
    final_path.write_bytes(serialize_scene(final))
    log_path = scene_dir / "episode.jsonl"
    log_path.write_text(log.to_jsonl(), encoding="utf-8")
    report_path = scene_dir / "report.json"
    report_path.write_text(
        json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n", "utf-8"
    )
    final_svg = scene_dir / "final.svg"
    final_svg.write_text(render.render_topdown(final), encoding="utf-8")
    traj_svg = scene_dir / "trajectory.svg"
    g0 = parse_scene(scene_path.read_bytes())
    traj_svg.write_text(render.render_trajectory(g0, log), encoding="utf-8")
    occ_path = scene_dir / "occupancy.pgm"
    occ_path.write_text(
        render.render_occupancy(geometry.occupancy_grid(final, cfg.geo.cell_size)),
        encoding="utf-8",
    )

    record.update(
        {
            "final_scene": str(final_path),
            "episode_log": str(log_path),
            "report_path": str(report_path),
            "report": report.to_json(),
            "renders": {
                "initial": str(scene_dir / "initial.svg"),
                "final": str(final_svg),
                "trajectory": str(traj_svg),
                "occupancy": str(occ_path),
            },
            "objects": export_metadata(final),
        }
    )
    return record


def run_pipeline(cfg: PipelineConfig) -> DatasetManifest:
    """Run every scene in the input directory through the editing loop
    and write the dataset manifest atomically."""
    cfg.validate()
    out_root = Path(cfg.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    scene_paths = sorted(Path(cfg.scenes_dir).glob("*.json"))
    if not scene_paths:
        raise ConfigError(f"no scene files in {cfg.scenes_dir}")

    if cfg.jobs == 1:
        records = [_run_one(cfg, p, out_root) for p in scene_paths]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(lambda p: _run_one(cfg, p, out_root), scene_paths))

    from datetime import datetime, timezone

    manifest = DatasetManifest(
        goal_template=cfg.goal_template,
        seed=cfg.seed,
        collision_checking=cfg.collision_checking,
        records=records,
        generated_at=datetime.now(timezone.utc).isoformat(),
    )
    _write_atomic(out_root / MANIFEST_NAME, json.dumps(manifest.to_json(), indent=2) + "\n")
    return manifest


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest_", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
