"""Model-judge discrete choice: each pair is queried twice with sides
swapped, and conflicting verdicts are recorded as inconsistent rather
than guessed. Likert-style model scoring is deliberately not offered
(forced choice is the stable protocol)."""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

from ..agents import AgentEndpoint, load_prompt
from .pairs import PairManifest, PairRecord

INCONSISTENT = "inconsistent"

_CHOICE_RE = re.compile(r"(?i)\b(?:image\s*)?([12])\b|\b(left|right)\b")


class JudgeParseFailure(Exception):
    pass


def summarize_image(path: str | Path) -> str:
    """Short content-keyed textual summary of a render so text-only
    judges can tell the two sides apart."""
    p = Path(path)
    data = p.read_bytes()
    digest = hashlib.sha256(data).hexdigest()[:12]
    if p.suffix.lower() == ".svg":
        objects = data.count(b'class="obj"')
        return f"svg render, {objects} objects, digest {digest}"
    return f"{p.suffix.lstrip('.')} render, digest {digest}"


def _parse_choice(raw: str) -> int:
    m = _CHOICE_RE.search(raw)
    if not m:
        raise ValueError(f"no forced choice found in {raw!r}")
    if m.group(1):
        return int(m.group(1))
    return 1 if m.group(2).lower() == "left" else 2


def _query(transport, goal: str, first: str, second: str) -> int:
    prompt = (
        f"GOAL: {goal}\n\n"
        f"Image 1: {first}\n"
        f"Image 2: {second}\n\n"
        "Which image better satisfies the goal?"
    )
    messages = [
        {"role": "system", "content": load_prompt("judge_dce")},
        {"role": "user", "content": prompt},
    ]
    raw = transport.complete(messages)
    try:
        return _parse_choice(raw)
    except ValueError:
        messages.append({"role": "assistant", "content": raw})
        messages.append(
            {"role": "user", "content": 'Answer with exactly "Image 1" or "Image 2".'}
        )
        raw = transport.complete(messages)
        try:
            return _parse_choice(raw)
        except ValueError as e:
            raise JudgeParseFailure(f"judge output unparseable after retry: {e}") from e


def judge_dce(pair: PairRecord, goal: str, judge: AgentEndpoint, transport=None) -> str:
    """Forced choice with a position-bias control.

    The pair is judged twice, once as presented and once with sides
    swapped. If both verdicts point at the same underlying image the
    result is that side ("left"/"right" in the original orientation);
    otherwise "inconsistent".
    """
    transport = transport or judge.build_transport()
    left = summarize_image(pair.left_path)
    right = summarize_image(pair.right_path)
    first = _query(transport, goal or pair.goal_text, left, right)
    second = _query(transport, goal or pair.goal_text, right, left)
    # map both answers back onto the original orientation
    verdict_1 = "left" if first == 1 else "right"
    verdict_2 = "right" if second == 1 else "left"
    if verdict_1 != verdict_2:
        return INCONSISTENT
    return verdict_1


def judge_manifest(
    manifest: PairManifest, judge: AgentEndpoint, goal: str = "", transport=None
) -> dict[str, str]:
    """Judge every pair; returns {pair_id: left|right|inconsistent}."""
    transport = transport or judge.build_transport()
    return {
        pair.pair_id: judge_dce(pair, goal or pair.goal_text, judge, transport=transport)
        for pair in manifest.pairs
    }


def aggregate_judge(verdicts: dict[str, str], truth: dict) -> dict:
    """Unblind side verdicts into per-system counts."""
    systems = truth.get("systems", {})
    counts: dict[str, int] = {systems.get("A", "A"): 0, systems.get("B", "B"): 0}
    inconsistent = 0
    for pair_id, verdict in verdicts.items():
        if verdict == INCONSISTENT:
            inconsistent += 1
            continue
        side = truth["pairs"][pair_id][verdict]
        label = systems.get(side, side)
        counts[label] = counts.get(label, 0) + 1
    return {"counts": counts, "inconsistent": inconsistent, "total": len(verdicts)}
