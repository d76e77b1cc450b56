"""Command-line interface.

Subcommands:
  generate   run the editing pipeline over a scene directory
  validate   check a scene file (optionally against a goal's constraints)
  render     top-down SVG / occupancy PGM / trajectory for one scene
  evaluate   A/B evaluation harness (pairs, serve, report, judge)

Flags mirror PipelineConfig; a JSON config file passed via --config
overrides flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import geometry, render
from .agents import AgentEndpoint, Role
from .constraints import CompileConfig, GeometryParams, compile_constraints, evaluate
from .editenv import EpisodeLog
from .harness.judge import aggregate_judge, judge_manifest
from .harness.pairs import PairManifest, make_pairs
from .harness.report import generate_report, judge_figure
from .harness.service import AnnotationService
from .pipeline import ConfigError, PipelineConfig, run_pipeline
from .scene import SceneError, parse_scene, validate_scene

logger = logging.getLogger(__name__)


def _add_generate(sub):
    p = sub.add_parser("generate", help="run the editing pipeline over a scene directory")
    p.add_argument("--scenes", required=True, help="directory of scene JSON files")
    p.add_argument("--goal", default="A {room_type}, where doors are blocked with large objects.",
                   help="goal template with a {room_type} placeholder")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--collision", choices=["on", "off"], default="on")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mock-evaluator", help="scripted transcript file or directory")
    p.add_argument("--mock-editor", help="scripted transcript file or directory")
    p.add_argument("--endpoint-config", help="JSON file describing live HTTP endpoints")
    p.add_argument("--config", help="JSON config file; overrides flags")
    p.set_defaults(func=cmd_generate)


def cmd_generate(args) -> int:
    values = {
        "scenes_dir": args.scenes,
        "goal_template": args.goal,
        "out_dir": args.out,
        "collision_checking": args.collision == "on",
        "jobs": args.jobs,
        "seed": args.seed,
        "mock_evaluator": args.mock_evaluator,
        "mock_editor": args.mock_editor,
        "endpoint_config": args.endpoint_config,
    }
    if args.config:
        overrides = json.loads(Path(args.config).read_text("utf-8"))
        unknown = set(overrides) - set(values)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(overrides)
    manifest = run_pipeline(PipelineConfig(**values))
    ok = sum(1 for r in manifest.records if r["status"] == "ok")
    print(f"pipeline complete: {ok}/{len(manifest.records)} scenes ok")
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    for r in manifest.records:
        status = r["status"]
        extra = "" if status == "ok" else f" ({r.get('error', '')})"
        print(f"  {r['room_type']}: {status}{extra}")
    return 0 if ok == len(manifest.records) else 1


def _add_validate(sub):
    p = sub.add_parser("validate", help="validate a scene file")
    p.add_argument("scene", help="scene JSON file")
    p.add_argument("--goal", help="also compile this goal and evaluate its constraints")
    p.add_argument("--collision", choices=["on", "off"], default="on")
    p.set_defaults(func=cmd_validate)


def cmd_validate(args) -> int:
    try:
        g = parse_scene(Path(args.scene).read_bytes())
    except SceneError as e:
        print(json.dumps({"ok": False, "error": f"{type(e).__name__}: {e}"}, indent=2))
        return 1
    report = validate_scene(g)
    out = report.to_json()
    if args.goal:
        cfg = CompileConfig(collision_enforced=args.collision == "on")
        cs = compile_constraints(args.goal, g, cfg)
        out["constraints"] = evaluate(cs, g).to_json()
    print(json.dumps(out, indent=2))
    if not report.ok:
        return 1
    if args.goal and not out["constraints"]["overall_hard_ok"]:
        return 1
    return 0


def _add_render(sub):
    p = sub.add_parser("render", help="render schematic views of a scene")
    p.add_argument("scene", help="scene JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scale", type=float, default=50.0, help="pixels per meter")
    p.add_argument("--cell", type=float, default=0.05, help="occupancy cell size (m)")
    p.add_argument("--log", help="episode log for a trajectory overlay")
    p.set_defaults(func=cmd_render)


def cmd_render(args) -> int:
    g = parse_scene(Path(args.scene).read_bytes())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    opts = render.RenderOptions(scale=args.scale)
    name = Path(args.scene).stem
    svg = out / f"{name}.svg"
    svg.write_text(render.render_topdown(g, opts), encoding="utf-8")
    pgm = out / f"{name}.pgm"
    pgm.write_text(
        render.render_occupancy(geometry.occupancy_grid(g, args.cell)), encoding="utf-8"
    )
    written = [svg, pgm]
    if args.log:
        log = EpisodeLog.from_jsonl(Path(args.log).read_text("utf-8"))
        traj = out / f"{name}_trajectory.svg"
        traj.write_text(render.render_trajectory(g, log, opts), encoding="utf-8")
        written.append(traj)
    for path in written:
        print(path)
    return 0


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="A/B evaluation harness")
    esub = p.add_subparsers(dest="eval_command", required=True)

    pairs = esub.add_parser("pairs", help="build a blinded pair manifest")
    pairs.add_argument("--left", required=True, help="render directory for system A")
    pairs.add_argument("--right", required=True, help="render directory for system B")
    pairs.add_argument("--seed", type=int, default=0)
    pairs.add_argument("--goal", default="", help="goal text shown to annotators")
    pairs.add_argument("--out", required=True, help="output directory")
    pairs.set_defaults(func=cmd_eval_pairs)

    serve = esub.add_parser("serve", help="serve the annotation API and UI")
    serve.add_argument("--manifest", required=True)
    serve.add_argument("--store", required=True, help="JSON Lines response store")
    serve.add_argument("--ui", help="static UI bundle directory")
    serve.add_argument("--bind", default="127.0.0.1:8400")
    serve.set_defaults(func=cmd_eval_serve)

    report = esub.add_parser("report", help="aggregate responses into CSVs and figures")
    report.add_argument("--store", required=True)
    report.add_argument("--truth", required=True, help="sealed truth file")
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_eval_report)

    judge = esub.add_parser("judge", help="model-judge forced choice over a manifest")
    judge.add_argument("--manifest", required=True)
    judge.add_argument("--truth", required=True)
    judge.add_argument("--goal", default="")
    judge.add_argument("--mock", help="scripted judge transcript (JSON Lines)")
    judge.add_argument("--endpoint-config", help="JSON endpoint descriptor for a live judge")
    judge.add_argument("--out", required=True)
    judge.set_defaults(func=cmd_eval_judge)


def cmd_eval_pairs(args) -> int:
    manifest = make_pairs(args.left, args.right, args.seed, goal_text=args.goal)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "pairs.json"
    truth_path = out / "truth.json"
    manifest.save(manifest_path, truth_path)
    print(f"{len(manifest.pairs)} pairs -> {manifest_path}")
    print(f"sealed truth -> {truth_path} (do not serve this file)")
    return 0


def cmd_eval_serve(args) -> int:
    manifest = PairManifest.load(args.manifest)
    host, _, port = args.bind.partition(":")
    service = AnnotationService(manifest, args.store, args.ui)
    try:
        service.serve_forever(host or "127.0.0.1", int(port or 8400))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_eval_report(args) -> int:
    truth = json.loads(Path(args.truth).read_text("utf-8"))
    summary = generate_report(args.store, truth, args.out)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_eval_judge(args) -> int:
    manifest = PairManifest.load(args.manifest)
    truth = json.loads(Path(args.truth).read_text("utf-8"))
    if args.mock:
        endpoint = AgentEndpoint(role=Role.JUDGE, mock_path=args.mock)
    elif args.endpoint_config:
        doc = json.loads(Path(args.endpoint_config).read_text("utf-8"))
        endpoint = AgentEndpoint.from_json(Role.JUDGE, doc["judge"])
    else:
        print("one of --mock or --endpoint-config is required", file=sys.stderr)
        return 2
    verdicts = judge_manifest(manifest, endpoint, goal=args.goal)
    summary = aggregate_judge(verdicts, truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "judge_verdicts.json").write_text(
        json.dumps({"verdicts": verdicts, "summary": summary}, indent=2) + "\n", "utf-8"
    )
    import csv

    with open(out / "judge_results.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["pair_id", "verdict_side", "system"])
        for pair_id, verdict in sorted(verdicts.items()):
            system = (
                ""
                if verdict == "inconsistent"
                else truth.get("systems", {}).get(truth["pairs"][pair_id][verdict], "")
            )
            writer.writerow([pair_id, verdict, system])
    judge_figure(summary, out / "judge_counts.png")
    print(json.dumps(summary, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sceneloop",
        description="Dual-agent scene editing pipeline and evaluation harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_validate(sub)
    _add_render(sub)
    _add_evaluate(sub)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, SceneError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
