from __future__ import annotations

import json

import pytest

from conftest import SCENES, TRANSCRIPTS
from sceneloop.cli import main
from test_harness_pairs import fill_dirs


def test_validate_ok(capsys):
    rc = main(["validate", str(SCENES / "bedroom.json")])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["ok"] is True


def test_validate_with_goal_reports_constraints(capsys):
    rc = main(
        [
            "validate",
            str(SCENES / "bedroom.json"),
            "--goal",
            "A bedroom, where doors are blocked with large objects.",
        ]
    )
    out = json.loads(capsys.readouterr().out)
    assert "constraints" in out
    assert out["constraints"]["overall_hard_ok"] is False  # door still open
    assert rc == 1


def test_validate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{", "utf-8")
    assert main(["validate", str(bad)]) == 1


def test_render_writes_svg_and_pgm(tmp_path, capsys):
    rc = main(
        ["render", str(SCENES / "office.json"), "--out", str(tmp_path), "--cell", "0.1"]
    )
    assert rc == 0
    assert (tmp_path / "office.svg").exists()
    assert (tmp_path / "office.pgm").exists()
    svg = (tmp_path / "office.svg").read_text("utf-8")
    assert 'id="desk_0"' in svg


def test_generate_and_render_trajectory(tmp_path):
    out = tmp_path / "dataset"
    rc = main(
        [
            "generate",
            "--scenes", str(SCENES),
            "--out", str(out),
            "--mock-evaluator", str(TRANSCRIPTS),
            "--mock-editor", str(TRANSCRIPTS),
            "--seed", "1",
        ]
    )
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text("utf-8"))
    assert all(r["status"] == "ok" for r in manifest["records"])

    rc = main(
        [
            "render",
            str(SCENES / "studio.json"),
            "--out", str(tmp_path / "r"),
            "--log", str(out / "studio" / "episode.jsonl"),
        ]
    )
    assert rc == 0
    assert (tmp_path / "r" / "studio_trajectory.svg").exists()


def test_generate_config_file_overrides_flags(tmp_path):
    out_flag = tmp_path / "flag_out"
    out_cfg = tmp_path / "cfg_out"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"out_dir": str(out_cfg)}), "utf-8")
    rc = main(
        [
            "generate",
            "--scenes", str(SCENES),
            "--out", str(out_flag),
            "--mock-evaluator", str(TRANSCRIPTS),
            "--mock-editor", str(TRANSCRIPTS),
            "--config", str(cfg),
        ]
    )
    assert rc == 0
    assert (out_cfg / "manifest.json").exists()
    assert not (out_flag / "manifest.json").exists()


def test_generate_bad_template_exits_2(tmp_path, capsys):
    rc = main(
        [
            "generate",
            "--scenes", str(SCENES),
            "--goal", "no placeholder",
            "--out", str(tmp_path / "x"),
            "--mock-evaluator", str(TRANSCRIPTS),
            "--mock-editor", str(TRANSCRIPTS),
        ]
    )
    assert rc == 2


def test_evaluate_pairs_report_judge_cycle(tmp_path, capsys):
    dir_a, dir_b = fill_dirs(tmp_path, [f"s{i}.svg" for i in range(4)])
    eval_dir = tmp_path / "eval"
    rc = main(
        [
            "evaluate", "pairs",
            "--left", str(dir_a),
            "--right", str(dir_b),
            "--seed", "5",
            "--goal", "doors blocked",
            "--out", str(eval_dir),
        ]
    )
    assert rc == 0
    manifest = json.loads((eval_dir / "pairs.json").read_text("utf-8"))
    truth = json.loads((eval_dir / "truth.json").read_text("utf-8"))
    assert len(manifest["pairs"]) == 4

    # synth responses from two annotators straight into the store
    store = eval_dir / "responses.jsonl"
    lines = []
    for p in manifest["pairs"]:
        for ann in ("ann_1", "ann_2"):
            lines.append(
                json.dumps(
                    {
                        "pair_id": p["pair_id"],
                        "annotator_id": ann,
                        "choice": "left",
                        "likert": [6, 5, 6],
                        "timestamp": "t",
                    }
                )
            )
    store.write_text("\n".join(lines) + "\n", "utf-8")

    report_dir = eval_dir / "report"
    rc = main(
        [
            "evaluate", "report",
            "--store", str(store),
            "--truth", str(eval_dir / "truth.json"),
            "--out", str(report_dir),
        ]
    )
    assert rc == 0
    for name in (
        "preferences.csv",
        "kappa.csv",
        "mos.csv",
        "summary.json",
        "preference_counts.png",
        "mos_scores.png",
        "agreement_ann_1_ann_2.png",
    ):
        assert (report_dir / name).exists(), name

    # scripted judge over the manifest
    judge_lines = []
    for p in manifest["pairs"]:
        left_is_a = truth["pairs"][p["pair_id"]]["left"] == "A"
        judge_lines.append("Image 1" if left_is_a else "Image 2")
        judge_lines.append("Image 2" if left_is_a else "Image 1")
    judge_path = tmp_path / "judge.jsonl"
    judge_path.write_text(
        "".join(json.dumps({"content": c}) + "\n" for c in judge_lines), "utf-8"
    )
    judge_dir = eval_dir / "judge"
    rc = main(
        [
            "evaluate", "judge",
            "--manifest", str(eval_dir / "pairs.json"),
            "--truth", str(eval_dir / "truth.json"),
            "--mock", str(judge_path),
            "--out", str(judge_dir),
        ]
    )
    assert rc == 0
    assert (judge_dir / "judge_results.csv").exists()
    assert (judge_dir / "judge_counts.png").exists()
    verdicts = json.loads((judge_dir / "judge_verdicts.json").read_text("utf-8"))
    assert verdicts["summary"]["counts"]["system_alpha"] == 4
    assert verdicts["summary"]["inconsistent"] == 0
