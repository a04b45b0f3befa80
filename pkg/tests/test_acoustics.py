import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anavi import mapgen
from anavi.acoustics import (AcousticConfig, ImpulseHistogram, direct_intensity, heuristic_db,
                             histogram_to_label, intensity_to_label, scale_action_db,
                             trace_impulse)
from anavi.gridmap import GridMap, MapError, MaterialTable, Pose2


def trace(grid, s, l, seed=0, **cfg):
    return trace_impulse(grid, None, Pose2(*s), Pose2(*l), AcousticConfig(**cfg),
                         np.random.default_rng(seed))


# -- label pipeline -----------------------------------------------------------

@pytest.mark.parametrize("i_max, db, y", [
    (1.0, 120.0, 0.9375),
    (1e-12, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (10.0, 128.0, 1.0),
    (10 ** 0.8, 128.0, 1.0),
    (1e-13, 0.0, 0.0),
])
def test_label_anchors(i_max, db, y):
    lab = intensity_to_label(i_max)
    assert lab.db_max == pytest.approx(db, abs=1e-12)
    assert lab.y == pytest.approx(y, abs=1e-12)
    assert lab.y == lab.db_max / 128


@given(st.floats(0, 100), st.floats(0, 100))
def test_label_monotone_and_total(a, b):
    la, lb = intensity_to_label(a), intensity_to_label(b)
    assert 0.0 <= la.y <= 1.0
    if a <= b:
        assert la.db_max <= lb.db_max


@pytest.mark.parametrize("r, db", [(1.0, 120.0), (10.0, 100.0), (0.1, 128.0), (1e6, 0.0)])
def test_heuristic(r, db):
    assert heuristic_db(r).db_max == pytest.approx(db, abs=1e-12)


def test_heuristic_rejects_nonpositive():
    with pytest.raises(ValueError):
        heuristic_db(0.0)


@pytest.mark.parametrize("y, src, out", [(0.68, 76, 51.68), (0.68, 98, 66.64), (0.0, 76, 0.0)])
def test_scale_action_db(y, src, out):
    assert scale_action_db(y, src) == pytest.approx(out, abs=1e-9)


@pytest.mark.parametrize("y, src", [(-0.1, 76), (1.1, 76), (0.5, 0)])
def test_scale_action_db_range(y, src):
    with pytest.raises(ValueError):
        scale_action_db(y, src)


def test_config_validation():
    assert AcousticConfig().n_bins == 200
    with pytest.raises(ValueError):
        AcousticConfig(n_rays=0)
    with pytest.raises(ValueError):
        AcousticConfig(listener_radius=0)
    with pytest.raises(ValueError):
        AcousticConfig(source_intensity=2.0)


# -- tracer -------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 4, 8])
def test_free_field_decay(freefield, d):
    h = trace(freefield, (6.0, 10.0), (6.0 + d, 10.0))
    assert histogram_to_label(h).db_max == pytest.approx(120 - 20 * math.log10(d), abs=1.5)


def test_free_field_unit_distance_intensity(freefield):
    h = trace(freefield, (6.0, 10.0), (7.0, 10.0))
    assert h.bins.sum() == pytest.approx(1.0, rel=0.03)


def test_coincident_source_listener_clips(freefield):
    h = trace(freefield, (5.125, 5.125), (5.125, 5.125))
    assert h.i_max == pytest.approx(16.0)
    assert histogram_to_label(h).db_max == 128.0


def test_single_wall_image_source():
    """Reflected energy off one wall matches the image-source prediction."""
    g = mapgen.single_wall()  # wall face at y = 5.0, absorption 0.05
    s, l = (10.0, 3.0), (10.0, 4.0)
    h = trace(g, s, l, n_rays=16384)
    d_direct = 1.0
    b_direct = int(d_direct / 343.0 / 0.001)
    reflected = h.bins.sum() - h.bins[b_direct]
    expected = 0.95 / 3.0 ** 2  # image source at y = 7
    assert reflected == pytest.approx(expected, rel=0.05)
    assert h.bins[b_direct] == pytest.approx(1.0)


def test_enclosed_listener_silent():
    cells = np.zeros((12, 12), np.uint8)
    cells[4:9, 4] = cells[4:9, 8] = cells[4, 4:9] = cells[8, 4:9] = 8
    g = GridMap("box", cells, MaterialTable.from_list([{"code": 8, "name": "anechoic", "absorption": 1.0}]))
    h = trace(g, (0.5, 0.5), (1.625, 1.625))
    assert not h.bins.any()
    assert histogram_to_label(h).y == 0.0


def test_non_traversable_endpoint(tworoom):
    with pytest.raises(MapError):
        trace(tworoom, (0.1, 0.1), (2.0, 2.0))


def test_deterministic(tworoom):
    a = trace(tworoom, (1.125, 1.125), (8.125, 3.125), seed=5)
    b = trace(tworoom, (1.125, 1.125), (8.125, 3.125), seed=5)
    assert np.array_equal(a.bins, b.bins) and a.total_paths == b.total_paths


def test_direct_reciprocity(freefield):
    a = trace(freefield, (3.0, 4.0), (6.0, 8.0))
    b = trace(freefield, (6.0, 8.0), (3.0, 4.0))
    assert np.array_equal(a.bins, b.bins)
    assert direct_intensity(5.0, AcousticConfig()) == pytest.approx(1 / 25)


@given(st.integers(0, 2**31), st.floats(0.0, 0.5))
def test_more_absorption_never_louder(seed, extra):
    rng = np.random.default_rng(seed)
    cells = (rng.random((14, 14)) < 0.15).astype(np.uint8) * rng.integers(1, 4, (14, 14)).astype(np.uint8)
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = 1
    cells[3, 3] = cells[10, 9] = 0
    mats = MaterialTable.from_list([{"code": c, "name": str(c), "absorption": a}
                                    for c, a in ((1, 0.05), (2, 0.3), (3, 0.5))])
    g = GridMap("rnd", cells, mats)
    louder = g.with_materials(mats.with_absorption(lambda a: min(1.0, a + extra)))
    cfg = AcousticConfig(n_rays=256)
    s, l = Pose2(0.875, 0.875), Pose2(2.375, 2.625)
    h1 = trace_impulse(g, None, s, l, cfg, np.random.default_rng(seed))
    h2 = trace_impulse(louder, None, s, l, cfg, np.random.default_rng(seed))
    assert (h2.bins <= h1.bins).all()


def test_histogram_csv(tmp_path):
    h = ImpulseHistogram(0.001, np.array([0.0, 2.0, 1.0]), 2)
    h.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "time_bin_s,intensity"
    assert len(lines) == 4
    assert h.i_max == 2.0
