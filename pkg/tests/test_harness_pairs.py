from __future__ import annotations

import pytest

from sceneloop.harness.pairs import NameMismatch, PairManifest, make_pairs


def fill_dirs(tmp_path, names, left="system_alpha", right="system_beta"):
    # distinct per-side content, deliberately free of the system names so
    # the blinding scans test the service rather than the fixtures
    dir_a = tmp_path / left
    dir_b = tmp_path / right
    dir_a.mkdir()
    dir_b.mkdir()
    for name in names:
        (dir_a / name).write_text(f"<svg><!-- v1 {name} --></svg>", "utf-8")
        (dir_b / name).write_text(f"<svg><!-- v2 {name} --></svg>", "utf-8")
    return dir_a, dir_b


def test_53_pairs_balanced(tmp_path):
    names = [f"scene_{i:02d}.svg" for i in range(53)]
    dir_a, dir_b = fill_dirs(tmp_path, names)
    manifest = make_pairs(dir_a, dir_b, seed=42)
    assert len(manifest.pairs) == 53
    a_left = sum(1 for p in manifest.pairs if p.left_system == "A")
    assert sorted((a_left, 53 - a_left)) == [26, 27]


def test_balance_holds_for_every_seed(tmp_path):
    names = [f"s{i}.png" for i in range(11)]
    dir_a, dir_b = fill_dirs(tmp_path, names)
    for seed in range(100):
        manifest = make_pairs(dir_a, dir_b, seed=seed)
        a_left = sum(1 for p in manifest.pairs if p.left_system == "A")
        assert abs(a_left - (len(names) - a_left)) <= 1


def test_name_mismatch_lists_difference(tmp_path):
    dir_a, dir_b = fill_dirs(tmp_path, ["a.svg", "b.svg"])
    (dir_b / "b.svg").unlink()
    with pytest.raises(NameMismatch) as exc:
        make_pairs(dir_a, dir_b, seed=1)
    assert exc.value.only_a == ["b.svg"]
    assert exc.value.only_b == []


def test_deterministic_manifests(tmp_path):
    dir_a, dir_b = fill_dirs(tmp_path, [f"s{i}.svg" for i in range(9)])
    m1 = make_pairs(dir_a, dir_b, seed=5, goal_text="g")
    m2 = make_pairs(dir_a, dir_b, seed=5, goal_text="g")
    assert m1.public_json() == m2.public_json()
    assert m1.truth_json() == m2.truth_json()


def test_pair_ids_opaque(tmp_path):
    dir_a, dir_b = fill_dirs(tmp_path, ["bedroom.svg"])
    manifest = make_pairs(dir_a, dir_b, seed=3)
    pid = manifest.pairs[0].pair_id
    assert "alpha" not in pid and "beta" not in pid and "bedroom" not in pid


def test_save_splits_truth_from_manifest(tmp_path):
    dir_a, dir_b = fill_dirs(tmp_path, ["x.svg", "y.svg"])
    manifest = make_pairs(dir_a, dir_b, seed=9, goal_text="blocked doors")
    mpath = tmp_path / "pairs.json"
    tpath = tmp_path / "truth.json"
    manifest.save(mpath, tpath)
    public = mpath.read_text("utf-8")
    assert "left_system" not in public
    assert '"A"' not in public.replace('"pair', "")  # no side identities
    loaded = PairManifest.load(mpath, tpath)
    assert [p.left_system for p in loaded.pairs] == [p.left_system for p in manifest.pairs]
    # loading without the sealed file keeps the truth blank
    blind = PairManifest.load(mpath)
    assert all(p.left_system == "" for p in blind.pairs)
