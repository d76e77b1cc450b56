"""Blinded A/B pair manifests.

Two directories of equally named renders become one pair per common
name. Side assignment is a seeded, balanced shuffle (left counts differ
by at most one across systems). Pair ids are opaque digests; which side
belongs to which system lives only in a separate sealed truth file.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

IMAGE_SUFFIXES = {".png", ".svg", ".jpg", ".jpeg", ".pgm"}

SYSTEM_A = "A"
SYSTEM_B = "B"


class NameMismatch(Exception):
    def __init__(self, only_a: list[str], only_b: list[str]):
        super().__init__(
            f"image sets differ; only in first dir: {only_a}, only in second dir: {only_b}"
        )
        self.only_a = only_a
        self.only_b = only_b


@dataclass
class PairRecord:
    pair_id: str
    name: str
    left_path: str
    right_path: str
    goal_text: str
    left_system: str  # SYSTEM_A or SYSTEM_B; sealed, never served


@dataclass
class PairManifest:
    seed: int
    systems: dict = field(default_factory=dict)  # {"A": label, "B": label}
    pairs: list[PairRecord] = field(default_factory=list)

    def pair(self, pair_id: str) -> PairRecord:
        for p in self.pairs:
            if p.pair_id == pair_id:
                return p
        raise KeyError(pair_id)

    def public_json(self) -> dict:
        """The manifest without the hidden truth."""
        return {
            "seed": self.seed,
            "pairs": [
                {
                    "pair_id": p.pair_id,
                    "name": p.name,
                    "left_path": p.left_path,
                    "right_path": p.right_path,
                    "goal_text": p.goal_text,
                }
                for p in self.pairs
            ],
        }

    def truth_json(self) -> dict:
        return {
            "systems": dict(self.systems),
            "pairs": {
                p.pair_id: {
                    "left": p.left_system,
                    "right": SYSTEM_B if p.left_system == SYSTEM_A else SYSTEM_A,
                }
                for p in self.pairs
            },
        }

    def save(self, manifest_path: str | Path, truth_path: str | Path) -> None:
        Path(manifest_path).write_text(
            json.dumps(self.public_json(), indent=2) + "\n", "utf-8"
        )
        Path(truth_path).write_text(
            json.dumps(self.truth_json(), indent=2) + "\n", "utf-8"
        )

    @classmethod
    def load(cls, manifest_path: str | Path, truth_path: str | Path | None = None) -> "PairManifest":
        doc = json.loads(Path(manifest_path).read_text("utf-8"))
        truth = (
            json.loads(Path(truth_path).read_text("utf-8"))
            if truth_path is not None
            else {"systems": {}, "pairs": {}}
        )
        pairs = []
        for p in doc["pairs"]:
            sealed = truth["pairs"].get(p["pair_id"], {})
            pairs.append(
                PairRecord(
                    pair_id=p["pair_id"],
                    name=p["name"],
                    left_path=p["left_path"],
                    right_path=p["right_path"],
                    goal_text=p["goal_text"],
                    left_system=sealed.get("left", ""),
                )
            )
        return cls(seed=int(doc["seed"]), systems=dict(truth.get("systems", {})), pairs=pairs)


def _images_by_name(directory: Path) -> dict[str, Path]:
    return {
        p.name: p
        for p in sorted(directory.iterdir())
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    }


def pair_id_for(seed: int, name: str) -> str:
    return "p" + hashlib.sha256(f"{seed}:{name}".encode("utf-8")).hexdigest()[:10]


def make_pairs(
    dir_a: str | Path,
    dir_b: str | Path,
    seed: int,
    goal_text: str = "",
) -> PairManifest:
    """One pair per common image name, with balanced seeded side
    assignment. Raises NameMismatch when the two sets differ. Image
    paths are stored absolute so the manifest works from any cwd."""
    dir_a, dir_b = Path(dir_a).resolve(), Path(dir_b).resolve()
    images_a = _images_by_name(dir_a)
    images_b = _images_by_name(dir_b)
    only_a = sorted(set(images_a) - set(images_b))
    only_b = sorted(set(images_b) - set(images_a))
    if only_a or only_b:
        raise NameMismatch(only_a, only_b)

    names = sorted(images_a)
    n = len(names)
    a_left_flags = [True] * ((n + 1) // 2) + [False] * (n // 2)
    random.Random(seed).shuffle(a_left_flags)

    pairs = []
    for name, a_left in zip(names, a_left_flags):
        left, right = (images_a[name], images_b[name]) if a_left else (images_b[name], images_a[name])
        pairs.append(
            PairRecord(
                pair_id=pair_id_for(seed, name),
                name=name,
                left_path=str(left),
                right_path=str(right),
                goal_text=goal_text,
                left_system=SYSTEM_A if a_left else SYSTEM_B,
            )
        )
    return PairManifest(
        seed=seed,
        systems={SYSTEM_A: dir_a.name, SYSTEM_B: dir_b.name},
        pairs=pairs,
    )
