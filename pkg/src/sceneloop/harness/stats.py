"""Preference aggregation, Cohen's kappa, and Likert mean-opinion
scores over the append-only JSON Lines response store."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

LIKERT_QUESTIONS = ("effectiveness", "arrangement", "scale")


class DegenerateMarginals(Exception):
    """Chance agreement is 1 while observed agreement is not; kappa is
    undefined."""


class UnknownPair(KeyError):
    pass


class DuplicateResponse(Exception):
    pass


class NoLikertData(Exception):
    pass


@dataclass(frozen=True)
class Response:
    pair_id: str
    annotator_id: str
    choice: str  # "left" | "right"
    likert: tuple[int, int, int] | None = None
    timestamp: str = ""

    def __post_init__(self):
        if self.choice not in ("left", "right"):
            raise ValueError(f"choice must be left or right, got {self.choice!r}")
        if not self.pair_id or not self.annotator_id:
            raise ValueError("pair_id and annotator_id must be non-empty")
        if self.likert is not None:
            values = tuple(self.likert)
            if len(values) != 3 or not all(
                isinstance(v, int) and not isinstance(v, bool) and 1 <= v <= 7
                for v in values
            ):
                raise ValueError("likert must be three integers in [1, 7]")
            object.__setattr__(self, "likert", values)

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "annotator_id": self.annotator_id,
            "choice": self.choice,
            "likert": list(self.likert) if self.likert else None,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Response":
        likert = d.get("likert")
        return cls(
            pair_id=str(d["pair_id"]),
            annotator_id=str(d["annotator_id"]),
            choice=str(d["choice"]),
            likert=tuple(int(v) for v in likert) if likert else None,
            timestamp=str(d.get("timestamp", "")),
        )


def append_response(path: str | Path, response: Response) -> None:
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(response.to_json(), ensure_ascii=False) + "\n")


def load_responses(path: str | Path) -> list[Response]:
    path = Path(path)
    if not path.exists():
        return []
    responses = []
    for line in path.read_text("utf-8").splitlines():
        if line.strip():
            responses.append(Response.from_json(json.loads(line)))
    return responses


@dataclass
class AgreementMatrix:
    """2x2 co-annotation counts: rows index annotator 1's system choice,
    columns annotator 2's, in label order."""

    labels: tuple[str, str]
    counts: list[list[int]] = field(default_factory=lambda: [[0, 0], [0, 0]])

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def add(self, first_choice: str, second_choice: str) -> None:
        self.counts[self.labels.index(first_choice)][self.labels.index(second_choice)] += 1

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "counts": [list(r) for r in self.counts]}


def cohens_kappa(matrix) -> float:
    """kappa = (p_o - p_e) / (1 - p_e) over a 2x2 agreement matrix.

    Returns exactly 1.0 when both observed and chance agreement are 1;
    raises DegenerateMarginals when chance agreement is 1 but observed
    is not (unreachable for genuine 2x2 counts, guarded regardless).
    """
    counts = matrix.counts if isinstance(matrix, AgreementMatrix) else matrix
    (a, b), (c, d) = counts
    total = a + b + c + d
    if total <= 0:
        raise ValueError("agreement matrix is empty")
    if min(a, b, c, d) < 0:
        raise ValueError("counts must be non-negative")
    p_o = (a + d) / total
    row1, row2 = a + b, c + d
    col1, col2 = a + c, b + d
    p_e = (row1 * col1 + row2 * col2) / (total * total)
    if p_e >= 1.0:
        if p_o >= 1.0:
            return 1.0
        raise DegenerateMarginals(f"p_e = {p_e}, p_o = {p_o}")
    return (p_o - p_e) / (1.0 - p_e)


@dataclass
class PreferenceAggregate:
    """Unblinded preference counts.

    selections counts individual responses per system; consensus counts
    pairs on which every responder picked the same system, with
    disagreements reported as split.
    """

    selections: dict
    consensus: dict
    split: int
    matrices: dict  # {(annotator_1, annotator_2): AgreementMatrix}

    def to_json(self) -> dict:
        return {
            "selections": dict(self.selections),
            "consensus": dict(self.consensus),
            "split": self.split,
            "matrices": {
                f"{a}|{b}": m.to_json() for (a, b), m in self.matrices.items()
            },
        }


def _system_of(truth: dict, response: Response) -> str:
    try:
        sealed = truth["pairs"][response.pair_id]
    except KeyError:
        raise UnknownPair(response.pair_id) from None
    side = sealed[response.choice]
    return truth.get("systems", {}).get(side, side)


def _check_duplicates(responses: list[Response]) -> None:
    seen = set()
    for r in responses:
        key = (r.annotator_id, r.pair_id)
        if key in seen:
            raise DuplicateResponse(f"annotator {r.annotator_id!r} answered pair {r.pair_id!r} twice")
        seen.add(key)


def aggregate_preferences(responses: list[Response], truth: dict) -> PreferenceAggregate:
    """Unblind choices and count selections per system, per-pair
    consensus (split on disagreement), and pairwise annotator agreement
    matrices over co-annotated pairs."""
    _check_duplicates(responses)
    labels = tuple(truth.get("systems", {}).get(k, k) for k in ("A", "B"))
    selections = {labels[0]: 0, labels[1]: 0}
    by_pair: dict[str, dict[str, str]] = {}
    for r in responses:
        system = _system_of(truth, r)
        selections[system] = selections.get(system, 0) + 1
        by_pair.setdefault(r.pair_id, {})[r.annotator_id] = system

    consensus = {labels[0]: 0, labels[1]: 0}
    split = 0
    for votes in by_pair.values():
        unique = set(votes.values())
        if len(unique) == 1:
            consensus[next(iter(unique))] += 1
        else:
            split += 1

    annotators = sorted({r.annotator_id for r in responses})
    matrices: dict = {}
    for i in range(len(annotators)):
        for j in range(i + 1, len(annotators)):
            a1, a2 = annotators[i], annotators[j]
            matrix = AgreementMatrix(labels=labels)
            for votes in by_pair.values():
                if a1 in votes and a2 in votes:
                    matrix.add(votes[a1], votes[a2])
            if matrix.total:
                matrices[(a1, a2)] = matrix
    return PreferenceAggregate(selections, consensus, split, matrices)


def aggregate_mos(responses: list[Response], truth: dict) -> dict:
    """Arithmetic mean per Likert question per system, with sample
    counts. The Likert block rates the scene the annotator chose."""
    _check_duplicates(responses)
    rated = [r for r in responses if r.likert is not None]
    if not rated:
        raise NoLikertData("no responses carry Likert ratings")
    sums: dict[str, list[float]] = {}
    counts: dict[str, int] = {}
    for r in rated:
        system = _system_of(truth, r)
        bucket = sums.setdefault(system, [0.0, 0.0, 0.0])
        for i, v in enumerate(r.likert):
            bucket[i] += v
        counts[system] = counts.get(system, 0) + 1
    return {
        system: {
            question: {"mean": sums[system][i] / counts[system], "n": counts[system]}
            for i, question in enumerate(LIKERT_QUESTIONS)
        }
        for system in sums
    }
