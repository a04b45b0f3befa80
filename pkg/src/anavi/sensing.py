"""360-degree range/material scans and model feature vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gridmap import GridMap, MapError, MaterialTable, Pose2
from .gridmap import LISTENER_RADIUS as R_MAX

MAX_RANGE = 12.0
N_BINS = 64
LAYOUTS = ("dirdist", "pano", "ego")


@dataclass(frozen=True, eq=False)
class PanoramaScan:
    ranges: np.ndarray
    absorptions: np.ndarray
    origin: Pose2
    max_range: float = MAX_RANGE
    bin0_angle: float = 0.0

    @property
    def n_bins(self) -> int:
        return len(self.ranges)

    def bin_angles(self) -> np.ndarray:
        return bin_angles(self.n_bins, self.bin0_angle)

    def to_dict(self) -> dict:
        return {"n_bins": self.n_bins, "max_range": self.max_range,
                "origin": [self.origin.x, self.origin.y],
                "ranges": self.ranges.tolist(), "absorptions": self.absorptions.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PanoramaScan":
        ranges = np.asarray(d["ranges"], dtype=float)
        absorptions = np.asarray(d["absorptions"], dtype=float)
        if len(ranges) != d["n_bins"] or len(absorptions) != d["n_bins"]:
            raise ValueError("scan arrays do not match n_bins")
        return cls(ranges, absorptions, Pose2(*d["origin"]), float(d["max_range"]))

    def __eq__(self, other):
        return (isinstance(other, PanoramaScan) and self.origin == other.origin
                and self.max_range == other.max_range
                and np.array_equal(self.ranges, other.ranges)
                and np.array_equal(self.absorptions, other.absorptions))


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: str


def bin_angles(n_bins: int, bin0: float = 0.0) -> np.ndarray:
    """Counterclockwise bin center angles, bin 0 at ``bin0``."""
    return bin0 + np.arange(n_bins) * (2.0 * math.pi / n_bins)


def scan_panorama(grid: GridMap, materials: MaterialTable | None, origin,
                  n_bins: int = N_BINS, max_range: float = MAX_RANGE) -> PanoramaScan:
    materials = grid.materials if materials is None else materials
    if grid.code_at(origin) != 0:
        raise MapError(f"scan origin {tuple(origin)} is not traversable")
    ranges = np.empty(n_bins)
    codes = np.empty(n_bins, dtype=np.int_)
    kernels.first_hits(grid.cells, grid.cell_size, float(origin[0]), float(origin[1]),
                       bin_angles(n_bins), float(max_range), ranges, codes)
    absorptions = materials.absorption_lut()[codes]
    return PanoramaScan(ranges, absorptions, Pose2(float(origin[0]), float(origin[1])),
                        float(max_range))


def ego_indices(n_bins: int, theta: float) -> np.ndarray:
    """The n_bins/4 bins whose centers lie in [theta - 45deg, theta + 45deg), in scan order
    starting from the clockwise-most one."""
    width = n_bins // 4
    step = 2.0 * math.pi / n_bins
    start = math.ceil((theta - math.pi / 4) / step - 1e-9)
    return np.arange(start, start + width) % n_bins


def polar(source, listener) -> tuple[float, float]:
    """(r, theta) of ``listener`` seen from ``source``; theta CCW from +x in [0, 2pi)."""
    dx = listener[0] - source[0]
    dy = listener[1] - source[1]
    theta = math.atan2(dy, dx) % (2.0 * math.pi)
    if theta >= 2.0 * math.pi:
        theta = 0.0
    return math.hypot(dx, dy), theta


def build_features(scan: PanoramaScan | None, r: float, theta: float, layout: str) -> FeatureVector:
    if layout not in LAYOUTS:
        raise ValueError(f"unknown feature layout {layout!r}")
    if not 0.0 < r <= R_MAX:
        raise ValueError(f"distance {r} outside (0, {R_MAX}]")
    if not 0.0 <= theta < 2.0 * math.pi:
        raise ValueError(f"direction {theta} outside [0, 2pi)")
    head = [r / R_MAX, theta / (2.0 * math.pi)]
    if layout == "dirdist":
        return FeatureVector(np.array(head), layout)
    if scan is None:
        raise ValueError(f"layout {layout!r} needs a scan")
    ranges = scan.ranges / scan.max_range
    absorptions = scan.absorptions
    if layout == "ego":
        idx = ego_indices(scan.n_bins, theta)
        ranges = ranges[idx]
        absorptions = absorptions[idx]
    return FeatureVector(np.concatenate([head, ranges, absorptions]), layout)


def feature_width(layout: str, n_bins: int = N_BINS) -> int:
    return {"dirdist": 2, "pano": 2 * n_bins + 2, "ego": 2 * (n_bins // 4) + 2}[layout]
