"""Dense loudness rasters over a map.

``fixed_robot``: the robot stays at the anchor and the listener sweeps every
traversable cell. ``fixed_listener``: the listener stays at the anchor and the
robot sweeps every cell, scanning its surroundings at each one. Cells more
than 10 m from the anchor, and solid cells, are absent (NaN).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .acoustics import AcousticConfig, histogram_to_label, trace_impulse
from .gridmap import LISTENER_RADIUS as R_MAX
from .gridmap import GridMap, MapError, Pose2
from .sensing import build_features, polar, scan_panorama

MODES = ("fixed_robot", "fixed_listener")


@dataclass(frozen=True, eq=False)
class AcousticRaster:
    map_id: str
    mode: str
    anchor: Pose2
    cell_size: float
    values: np.ndarray  # (height, width), NaN where absent
    model_kind: str

    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_dict(self) -> dict:
        return {"map_id": self.map_id, "mode": self.mode, "anchor": list(self.anchor),
                "cell_size": self.cell_size, "model_kind": self.model_kind,
                "values": [[None if math.isnan(v) else float(v) for v in row]
                           for row in self.values]}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ix", "iy", "x", "y", "y_hat"])
            for iy, ix in zip(*np.nonzero(self.present())):
                w.writerow([ix, iy, (ix + 0.5) * self.cell_size, (iy + 0.5) * self.cell_size,
                            repr(float(self.values[iy, ix]))])


def effective_polar(grid: GridMap, a, b) -> tuple[float, float]:
    """Polar coordinates of b from a; a zero distance is lifted to half a cell."""
    r, theta = polar(a, b)
    return max(r, grid.cell_size / 2), theta


def _cells_within(grid: GridMap, anchor) -> list[tuple[int, int, Pose2]]:
    out = []
    for flat in grid.free_cells:
        p = grid.center_of_index(flat)
        if p.distance(Pose2(*anchor)) <= R_MAX:
            iy, ix = divmod(int(flat), grid.width)
            out.append((ix, iy, p))
    return out


def _raster(grid, mode, anchor, kind, cells, preds):
    values = np.full((grid.height, grid.width), np.nan)
    for (ix, iy, _), v in zip(cells, preds):
        values[iy, ix] = v
    return AcousticRaster(grid.id, mode, Pose2(*anchor), grid.cell_size, values, kind)


def fixed_robot_map(grid: GridMap, materials, robot, model) -> AcousticRaster:
    if grid.code_at(robot) != 0:
        raise MapError(f"robot pose {tuple(robot)} is not traversable")
    scan = scan_panorama(grid, materials, robot) if model.input_layout != "dirdist" else None
    cells = _cells_within(grid, robot)
    X = np.stack([build_features(scan, *effective_polar(grid, robot, p), model.input_layout).values
                  for _, _, p in cells])
    return _raster(grid, "fixed_robot", robot, model.kind, cells, model.predict_batch(X))


def fixed_listener_map(grid: GridMap, materials, listener, model) -> AcousticRaster:
    if grid.code_at(listener) != 0:
        raise MapError(f"listener pose {tuple(listener)} is not traversable")
    cells = _cells_within(grid, listener)
    rows = []
    for _, _, p in cells:
        scan = scan_panorama(grid, materials, p) if model.input_layout != "dirdist" else None
        rows.append(build_features(scan, *effective_polar(grid, p, listener), model.input_layout).values)
    return _raster(grid, "fixed_listener", listener, model.kind, cells,
                   model.predict_batch(np.stack(rows)))


def oracle_map(grid: GridMap, mode: str, anchor, cfg: AcousticConfig | None = None,
               seed: int = 0) -> AcousticRaster:
    """Ground-truth raster from the ray tracer (slow; meant for small maps)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if grid.code_at(anchor) != 0:
        raise MapError(f"anchor {tuple(anchor)} is not traversable")
    cfg = cfg or AcousticConfig()
    cells = _cells_within(grid, anchor)
    preds = []
    for k, (_, _, p) in enumerate(cells):
        rng = np.random.default_rng([seed, k])
        src, dst = (anchor, p) if mode == "fixed_robot" else (p, anchor)
        preds.append(histogram_to_label(trace_impulse(grid, None, src, dst, cfg, rng)).y)
    return _raster(grid, mode, anchor, "oracle", cells, preds)
