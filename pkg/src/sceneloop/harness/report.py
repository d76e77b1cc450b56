"""Evaluation reports: CSV tables plus matplotlib figures rendered to
files alongside them (preference counts, annotator agreement heatmap
with kappa, per-question mean opinion scores, judge outcomes)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .stats import (
    LIKERT_QUESTIONS,
    NoLikertData,
    PreferenceAggregate,
    aggregate_mos,
    aggregate_preferences,
    cohens_kappa,
    load_responses,
)

_BAR_COLORS = ("#4878a8", "#c44e52", "#999999")


def write_preference_csv(agg: PreferenceAggregate, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["system", "consensus_pairs", "individual_selections"])
        for system in sorted(agg.consensus):
            writer.writerow([system, agg.consensus[system], agg.selections.get(system, 0)])
        writer.writerow(["split", agg.split, ""])


def write_kappa_csv(agg: PreferenceAggregate, path: Path) -> list[dict]:
    rows = []
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["annotator_1", "annotator_2", "kappa", "co_annotated"])
        for (a1, a2), matrix in sorted(agg.matrices.items()):
            kappa = cohens_kappa(matrix)
            writer.writerow([a1, a2, f"{kappa:.6f}", matrix.total])
            rows.append({"annotators": (a1, a2), "kappa": kappa, "matrix": matrix})
    return rows


def write_mos_csv(mos: dict, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["system", "question", "mean", "n"])
        for system in sorted(mos):
            for question in LIKERT_QUESTIONS:
                cell = mos[system][question]
                writer.writerow([system, question, f"{cell['mean']:.4f}", cell["n"]])


def preference_figure(agg: PreferenceAggregate, path: Path) -> None:
    labels = sorted(agg.consensus) + ["split"]
    values = [agg.consensus[k] for k in sorted(agg.consensus)] + [agg.split]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, values, color=_BAR_COLORS[: len(labels)])
    ax.bar_label(bars)
    ax.set_ylabel("pairs")
    ax.set_title("Per-pair preference (consensus)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def agreement_figure(matrix, kappa: float, annotators: tuple[str, str], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(matrix.counts, cmap="Blues")
    ax.set_xticks([0, 1], labels=matrix.labels)
    ax.set_yticks([0, 1], labels=matrix.labels)
    ax.set_xlabel(annotators[1])
    ax.set_ylabel(annotators[0])
    for i in range(2):
        for j in range(2):
            ax.text(j, i, str(matrix.counts[i][j]), ha="center", va="center")
    ax.set_title(f"Agreement (kappa = {kappa:.3f})")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def mos_figure(mos: dict, path: Path) -> None:
    systems = sorted(mos)
    x = range(len(LIKERT_QUESTIONS))
    width = 0.8 / max(1, len(systems))
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for k, system in enumerate(systems):
        means = [mos[system][q]["mean"] for q in LIKERT_QUESTIONS]
        offsets = [i + (k - (len(systems) - 1) / 2) * width for i in x]
        ax.bar(offsets, means, width, label=system, color=_BAR_COLORS[k % len(_BAR_COLORS)])
    ax.set_xticks(list(x), labels=LIKERT_QUESTIONS)
    ax.set_ylim(0, 7)
    ax.axhline(4.5, color="#666666", linewidth=0.8, linestyle="--")
    ax.set_ylabel("mean rating (1-7)")
    ax.set_title("Mean opinion scores")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def judge_figure(judge_summary: dict, path: Path) -> None:
    counts = judge_summary["counts"]
    labels = sorted(counts) + ["inconsistent"]
    values = [counts[k] for k in sorted(counts)] + [judge_summary["inconsistent"]]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, values, color=_BAR_COLORS[: len(labels)])
    ax.bar_label(bars)
    ax.set_ylabel("pairs")
    ax.set_title("Model-judge forced choice")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def generate_report(store_path: str | Path, truth: dict, out_dir: str | Path) -> dict:
    """Aggregate the response store and write CSVs plus figures.

    Returns a summary dict (also written as summary.json)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    responses = load_responses(store_path)
    agg = aggregate_preferences(responses, truth)

    write_preference_csv(agg, out / "preferences.csv")
    preference_figure(agg, out / "preference_counts.png")
    kappa_rows = write_kappa_csv(agg, out / "kappa.csv")
    for row in kappa_rows:
        a1, a2 = row["annotators"]
        agreement_figure(
            row["matrix"], row["kappa"], (a1, a2), out / f"agreement_{a1}_{a2}.png"
        )

    summary = {
        "responses": len(responses),
        "preferences": agg.to_json(),
        "kappa": {
            f"{a1}|{a2}": row["kappa"]
            for row in kappa_rows
            for (a1, a2) in [row["annotators"]]
        },
    }
    try:
        mos = aggregate_mos(responses, truth)
        write_mos_csv(mos, out / "mos.csv")
        mos_figure(mos, out / "mos_scores.png")
        summary["mos"] = mos
    except NoLikertData:
        summary["mos"] = None

    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, ensure_ascii=False) + "\n", "utf-8"
    )
    return summary
