from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sceneloop.harness.stats import (
    AgreementMatrix,
    DuplicateResponse,
    NoLikertData,
    Response,
    UnknownPair,
    aggregate_mos,
    aggregate_preferences,
    append_response,
    cohens_kappa,
    load_responses,
)

# hand-derived before implementation:
#   [[20,5],[5,23]]: p_o = 43/53, p_e = (25*25 + 28*28)/53^2 -> kappa = 87/140
#   [[38,5],[4,6]]:  p_o = 44/53, p_e = (43*42 + 10*11)/53^2 -> kappa = 416/893
#   [[10,2],[3,15]]: p_o = 25/30, p_e = (12*13 + 18*17)/900  -> kappa = 48/73
#   [[9,1],[81,9]]:  p_o = 0.18 = p_e                        -> kappa = 0
HAND_CASES = [
    ([[26, 0], [0, 27]], 1.0),
    ([[25, 25], [25, 25]], 0.0),
    ([[20, 5], [5, 23]], 87 / 140),
    ([[38, 5], [4, 6]], 416 / 893),
    ([[10, 2], [3, 15]], 48 / 73),
    ([[9, 1], [81, 9]], 0.0),
    ([[5, 0], [0, 0]], 1.0),
    ([[0, 0], [0, 7]], 1.0),
]


@pytest.mark.parametrize("counts,expected", HAND_CASES)
def test_kappa_hand_derived(counts, expected):
    assert cohens_kappa(counts) == pytest.approx(expected, abs=1e-9)


def test_kappa_empty_matrix_rejected():
    with pytest.raises(ValueError):
        cohens_kappa([[0, 0], [0, 0]])


@given(
    st.integers(min_value=0, max_value=200),
    st.integers(min_value=0, max_value=200),
    st.integers(min_value=0, max_value=200),
    st.integers(min_value=0, max_value=200),
)
@settings(max_examples=200, deadline=None)
def test_kappa_invariant_under_consistent_label_swap(a, b, c, d):
    if a + b + c + d == 0:
        return
    k1 = cohens_kappa([[a, b], [c, d]])
    k2 = cohens_kappa([[d, c], [b, a]])  # both annotators relabeled
    assert k1 == pytest.approx(k2, abs=1e-12)


@given(st.integers(min_value=1, max_value=300), st.integers(min_value=0, max_value=300))
@settings(max_examples=100, deadline=None)
def test_kappa_perfect_diagonal_is_one(a, d):
    assert cohens_kappa([[a, 0], [0, d]]) == 1.0


def test_kappa_bounds():
    for counts, _ in HAND_CASES:
        assert -1.0 <= cohens_kappa(counts) <= 1.0


TRUTH = {
    "systems": {"A": "collision_aware", "B": "holodeck_baseline"},
    "pairs": {},
}


def build_truth(n=53):
    truth = {"systems": dict(TRUTH["systems"]), "pairs": {}}
    for i in range(n):
        # alternate which side hides system A
        left = "A" if i % 2 == 0 else "B"
        truth["pairs"][f"p{i:03d}"] = {
            "left": left,
            "right": "B" if left == "A" else "A",
        }
    return truth


def choice_for(truth, pair_id, system):
    return "left" if truth["pairs"][pair_id]["left"] == system else "right"


def paper_fixture_responses(truth):
    """38 pairs unanimous for the collision-aware system, 6 unanimous
    for the baseline, 9 split between the two annotators."""
    responses = []
    pair_ids = sorted(truth["pairs"])
    for i, pid in enumerate(pair_ids):
        if i < 38:
            winners = ("A", "A")
        elif i < 44:
            winners = ("B", "B")
        elif i < 49:
            winners = ("A", "B")
        else:
            winners = ("B", "A")
        for annotator, system in zip(("ann_1", "ann_2"), winners):
            responses.append(
                Response(pid, annotator, choice_for(truth, pid, system))
            )
    return responses


def test_aggregate_matches_paper_counts_fixture():
    truth = build_truth(53)
    agg = aggregate_preferences(paper_fixture_responses(truth), truth)
    assert agg.consensus == {"collision_aware": 38, "holodeck_baseline": 6}
    assert agg.split == 9
    matrix = agg.matrices[("ann_1", "ann_2")]
    assert matrix.total == 53
    assert matrix.counts[0][0] == 38  # both picked collision_aware
    assert matrix.counts[1][1] == 6


def test_aggregate_zero_responses():
    truth = build_truth(3)
    agg = aggregate_preferences([], truth)
    assert agg.consensus == {"collision_aware": 0, "holodeck_baseline": 0}
    assert agg.split == 0
    assert agg.matrices == {}


def test_aggregate_duplicate_response_rejected():
    truth = build_truth(2)
    pid = sorted(truth["pairs"])[0]
    responses = [Response(pid, "ann_1", "left"), Response(pid, "ann_1", "right")]
    with pytest.raises(DuplicateResponse):
        aggregate_preferences(responses, truth)


def test_aggregate_unknown_pair():
    truth = build_truth(2)
    with pytest.raises(UnknownPair):
        aggregate_preferences([Response("ghost", "ann_1", "left")], truth)


def test_mos_all_sevens():
    truth = build_truth(4)
    responses = [
        Response(pid, "ann_1", choice_for(truth, pid, "A"), likert=(7, 7, 7))
        for pid in truth["pairs"]
    ]
    mos = aggregate_mos(responses, truth)
    for question in ("effectiveness", "arrangement", "scale"):
        assert mos["collision_aware"][question]["mean"] == 7.0


def test_mos_mixed_mean():
    truth = build_truth(2)
    pids = sorted(truth["pairs"])
    responses = [
        Response(pids[0], "ann_1", choice_for(truth, pids[0], "A"), likert=(4, 4, 4)),
        Response(pids[1], "ann_1", choice_for(truth, pids[1], "A"), likert=(5, 5, 5)),
    ]
    mos = aggregate_mos(responses, truth)
    assert mos["collision_aware"]["effectiveness"]["mean"] == pytest.approx(4.5)
    assert mos["collision_aware"]["effectiveness"]["n"] == 2


def test_mos_paper_target_fixture():
    # collision-aware ratings average above 4.5 of 7 on every question
    truth = build_truth(10)
    ratings = [(5, 6, 5), (6, 5, 6), (5, 5, 5), (6, 6, 6), (4, 5, 6),
               (5, 6, 5), (6, 5, 5), (5, 5, 6), (6, 6, 5), (5, 5, 5)]
    responses = [
        Response(pid, "ann_1", choice_for(truth, pid, "A"), likert=r)
        for pid, r in zip(sorted(truth["pairs"]), ratings)
    ]
    mos = aggregate_mos(responses, truth)
    for question in ("effectiveness", "arrangement", "scale"):
        assert mos["collision_aware"][question]["mean"] > 4.5


def test_mos_requires_likert():
    truth = build_truth(2)
    responses = [Response(sorted(truth["pairs"])[0], "ann_1", "left")]
    with pytest.raises(NoLikertData):
        aggregate_mos(responses, truth)


def test_response_validation():
    with pytest.raises(ValueError):
        Response("p", "a", "maybe")
    with pytest.raises(ValueError):
        Response("p", "a", "left", likert=(0, 4, 4))
    with pytest.raises(ValueError):
        Response("p", "a", "left", likert=(1, 2))


def test_store_roundtrip_append_only(tmp_path):
    store = tmp_path / "responses.jsonl"
    r1 = Response("p1", "ann", "left", likert=(1, 2, 3), timestamp="t1")
    r2 = Response("p2", "ann", "right", timestamp="t2")
    append_response(store, r1)
    append_response(store, r2)
    assert load_responses(store) == [r1, r2]
    # aggregates are pure functions of the store contents
    truth = {
        "systems": {"A": "x", "B": "y"},
        "pairs": {
            "p1": {"left": "A", "right": "B"},
            "p2": {"left": "A", "right": "B"},
        },
    }
    a1 = aggregate_preferences(load_responses(store), truth)
    a2 = aggregate_preferences(load_responses(store), truth)
    assert a1.to_json() == a2.to_json()


def test_agreement_matrix_total():
    m = AgreementMatrix(labels=("x", "y"))
    m.add("x", "x")
    m.add("x", "y")
    m.add("y", "y")
    assert m.total == 3
    assert m.counts == [[1, 1], [0, 1]]
