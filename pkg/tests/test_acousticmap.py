import json

import numpy as np
import pytest

from anavi import mapgen, planner, predictor
from anavi.acousticmap import fixed_listener_map, fixed_robot_map, oracle_map
from anavi.acoustics import AcousticConfig
from anavi.gridmap import MapError, Pose2
from helpers import DIVIDER_SOURCE_X

H = predictor.heuristic_model()


def centers(grid):
    iy, ix = np.mgrid[0:grid.height, 0:grid.width]
    return (ix + 0.5) * grid.cell_size, (iy + 0.5) * grid.cell_size


def test_heuristic_radial(tworoom):
    a = Pose2(3.375, 3.625)
    r = fixed_robot_map(tworoom, None, a, H)
    cx, cy = centers(tworoom)
    d = np.round(np.hypot(cx - a.x, cy - a.y), 9)
    for dist in np.unique(d[r.present()]):
        vals = r.values[(d == dist) & r.present()]
        assert np.ptp(vals) == 0


def test_values_and_support(tworoom, freefield):
    a = Pose2(10.125, 10.125)
    r = fixed_robot_map(freefield, None, a, H)
    cx, cy = centers(freefield)
    d = np.hypot(cx - a.x, cy - a.y)
    assert np.array_equal(r.present(), d <= 10)
    v = r.values[r.present()]
    assert ((v >= 0) & (v <= 1)).all()
    r2 = fixed_listener_map(tworoom, None, Pose2(3.375, 3.625), H)
    assert not r2.present()[tworoom.cells != 0].any()


def test_swap_identity(tworoom):
    for a in (Pose2(3.375, 3.625), Pose2(8.125, 1.125)):
        r1 = fixed_robot_map(tworoom, None, a, H)
        r2 = fixed_listener_map(tworoom, None, a, H)
        assert np.array_equal(r1.values, r2.values, equal_nan=True)


def test_single_cell():
    cells = np.full((3, 3), 1, np.uint8)
    cells[1, 1] = 0
    g = mapgen._make("one", cells)
    r = fixed_robot_map(g, None, Pose2(0.375, 0.375), H)
    assert r.present().sum() == 1


def test_non_traversable_anchor(tworoom):
    with pytest.raises(MapError):
        fixed_robot_map(tworoom, None, Pose2(0.1, 0.1), H)
    with pytest.raises(MapError):
        fixed_listener_map(tworoom, None, Pose2(0.1, 0.1), H)


def test_listener_map_feeds_planner(tworoom):
    lst = Pose2(3.375, 0.875)
    r = fixed_listener_map(tworoom, None, lst, H)
    act = planner.ActionProfile("fast", 1.0, 76.0)
    prob = planner.PlanProblem(tworoom, Pose2(0.625, 0.875), Pose2(6.125, 0.875),
                               [planner.Listener(lst)], [act], 1.0, H)
    for iy, ix in list(zip(*np.nonzero(r.present())))[::37]:
        assert planner.node_noise(prob, (ix, iy), act)[0] == pytest.approx(r.values[iy, ix] * 76.0)


def test_wall_shadow_with_visual_model(tworoom, tworoom_pano):
    src = Pose2(DIVIDER_SOURCE_X, 1.125)
    r = fixed_robot_map(tworoom, None, src, tworoom_pano)
    cx, cy = centers(tworoom)
    d = np.hypot(cx - src.x, cy - src.y)
    band = (d > 0.75) & (d < 2.5) & r.present()
    behind = band & (cx > 6.75)
    opened = band & (cx < 6.5)
    assert np.median(r.values[behind]) < np.median(r.values[opened])


def test_cross_spread():
    g = mapgen.cross_intersection()
    a = Pose2(5.875, 5.875)
    r = oracle_map(g, "fixed_listener", a, AcousticConfig(n_rays=512))
    iy, ix = np.mgrid[0:g.height, 0:g.width]
    cx, cy = centers(g)
    d = np.hypot(cx - a.x, cy - a.y)
    band = (d > 3) & (d < 5) & r.present()
    arms = {"E": (ix > 26) & (iy > 20) & (iy < 27), "W": (ix < 21) & (iy > 20) & (iy < 27),
            "N": (iy > 26) & (ix > 20) & (ix < 27), "S": (iy < 21) & (ix > 20) & (ix < 27)}
    arm = np.zeros_like(band)
    for m in arms.values():
        assert np.median(r.values[band & m]) > 0.5
        arm |= m
    assert np.median(r.values[band & ~arm]) < np.median(r.values[band & arm]) - 0.3


def test_oracle_mode_check(tworoom):
    with pytest.raises(ValueError):
        oracle_map(tworoom, "sideways", Pose2(3.375, 3.625))


def test_export(tmp_path, tworoom):
    r = fixed_robot_map(tworoom, None, Pose2(3.375, 3.625), H)
    r.to_json(tmp_path / "r.json")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["mode"] == "fixed_robot" and d["cell_size"] == 0.25
    assert d["values"][0][0] is None
    assert len(d["values"]) == tworoom.height
    r.to_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "ix,iy,x,y,y_hat" and len(lines) == 1 + r.present().sum()
