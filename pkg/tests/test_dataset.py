import json

import numpy as np
import pytest

from anavi import dataset, mapgen
from anavi.acoustics import AcousticConfig, heuristic_db
from anavi.dataset import (DatasetError, DatasetManifest, Sample, check_split_hygiene, generate,
                           iter_dataset, read_dataset, read_manifest, write_dataset,
                           write_manifest)

from helpers import labeled, wall_pairs


@pytest.fixture(scope="module")
def small(tworoom):
    return list(generate([tworoom], 20, seed=3))


def test_generate_count_and_stability(tworoom):
    a = list(generate([tworoom], 5, seed=11))
    b = list(generate([tworoom], 5, seed=11))
    assert len(a) == 5 and a == b


def test_generate_parallel_matches_serial(tworoom):
    assert list(generate([tworoom], 6, seed=2, jobs=2)) == list(generate([tworoom], 6, seed=2))


def test_sample_invariants(small):
    dataset.validate(small)
    for s in small:
        assert s.y == s.db_max / 128
        assert abs(s.r - s.source.distance(s.listener)) <= 1e-9


def test_free_field_labels_follow_heuristic(freefield):
    samples = list(generate([freefield], 200, seed=0))
    err = np.array([abs(s.y - heuristic_db(s.r).y) for s in samples])
    assert np.mean(err <= 1.5 / 128) >= 0.95


def test_wall_lowers_labels(tworoom):
    walled, open_ = [], []
    for k, (s, lw, lo) in enumerate(wall_pairs(100)):
        walled.append(labeled(tworoom, s, lw, k).y)
        open_.append(labeled(tworoom, s, lo, k).y)
    assert np.median(walled) < np.median(open_)


def test_roundtrip(tmp_path, tworoom):
    samples = list(generate([tworoom], 100, seed=1))
    path = tmp_path / "d.jsonl"
    assert write_dataset(path, samples) == 100
    back = read_dataset(path)
    assert back == samples
    for a, b in zip(samples, back):
        assert abs(a.y - b.y) <= 1e-12 and np.array_equal(a.scan.ranges, b.scan.ranges)


def test_byte_determinism(tmp_path, tworoom):
    for name in ("a", "b"):
        write_dataset(tmp_path / f"{name}.jsonl", generate([tworoom], 10, seed=4))
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_truncated_file_names_line(tmp_path, small):
    path = tmp_path / "d.jsonl"
    write_dataset(path, small[:3])
    text = path.read_text()
    path.write_text(text[: len(text) - 40])
    with pytest.raises(DatasetError, match=r"d\.jsonl:3"):
        read_dataset(path)


def test_schema_version_refused(tmp_path, small):
    d = small[0].to_dict()
    d["schema_version"] = 0
    path = tmp_path / "old.jsonl"
    path.write_text(json.dumps(d) + "\n")
    with pytest.raises(DatasetError, match="regenerate"):
        list(iter_dataset(path))


def test_manifest_roundtrip(tmp_path):
    m = DatasetManifest("train", ["a", "b"], 5, 3, AcousticConfig())
    write_manifest(tmp_path / "x.jsonl", m)
    assert (tmp_path / "x.manifest.json").exists()
    back = read_manifest(tmp_path / "x.jsonl")
    assert back == m


def test_manifest_validation():
    with pytest.raises(DatasetError):
        DatasetManifest("holdout", [], 1, 0, AcousticConfig())
    with pytest.raises(DatasetError):
        DatasetManifest("train", [], 0, 0, AcousticConfig())


def test_split_hygiene():
    cfg = AcousticConfig()
    check_split_hygiene([DatasetManifest("train", ["a"], 1, 0, cfg),
                         DatasetManifest("test", ["b"], 1, 0, cfg)])
    with pytest.raises(DatasetError, match="both"):
        check_split_hygiene([DatasetManifest("train", ["a"], 1, 0, cfg),
                             DatasetManifest("test", ["a"], 1, 0, cfg)])


def test_split_maps_disjoint():
    sp = mapgen.split_maps(0)
    ids = [m.id for maps in sp.values() for m in maps]
    assert len(ids) == len(set(ids)) == 15
    assert [len(sp[k]) for k in ("train", "val", "test")] == [10, 2, 3]


def test_arrays_shapes(small):
    X, y = dataset.arrays(small, "pano")
    assert X.shape == (20, 130) and y.shape == (20,)
    with pytest.raises(DatasetError):
        dataset.arrays([], "pano")


def test_per_map_validation(tworoom):
    with pytest.raises(DatasetError):
        list(generate([tworoom], 0, seed=0))


def test_sample_equality(small):
    assert small[0] == Sample.from_dict(small[0].to_dict())
    assert small[0] != small[1]
