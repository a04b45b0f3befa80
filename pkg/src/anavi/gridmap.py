"""Material-annotated occupancy grids.

A map is a dense grid of material codes. Code 0 is free air; any other code is
a solid cell made of that material. Row ``i`` of the map file is the strip of
cells with ``i * cell_size <= y < (i + 1) * cell_size``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import kernels

SOURCE_RADIUS = 20.0
LISTENER_RADIUS = 10.0
N_CENTERS = 100


class MapError(ValueError):
    """Raised for malformed or inconsistent map files."""


class SamplingExhausted(RuntimeError):
    pass


class Pose2(NamedTuple):
    x: float
    y: float

    def distance(self, other: "Pose2") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class Material:
    code: int
    name: str
    absorption: float


@dataclass(frozen=True)
class MaterialTable:
    entries: tuple[Material, ...]

    def __post_init__(self):
        codes = [m.code for m in self.entries]
        if len(set(codes)) != len(codes):
            raise MapError("duplicate material codes")
        for m in self.entries:
            if not 0 <= m.code <= 255:
                raise MapError(f"material code {m.code} outside 0..255")
            if not 0.0 <= m.absorption <= 1.0:
                raise MapError(f"material {m.code} absorption {m.absorption} outside [0, 1]")
        if 0 not in codes:
            object.__setattr__(self, "entries", (Material(0, "air", 0.0),) + tuple(self.entries))
        elif self[0].absorption != 0.0:
            raise MapError("code 0 is reserved for non-absorbing air")

    @classmethod
    def from_list(cls, items) -> "MaterialTable":
        return cls(tuple(Material(int(d["code"]), str(d["name"]), float(d["absorption"])) for d in items))

    def __getitem__(self, code: int) -> Material:
        for m in self.entries:
            if m.code == code:
                return m
        raise KeyError(code)

    def __contains__(self, code) -> bool:
        return any(m.code == code for m in self.entries)

    def absorption_lut(self) -> np.ndarray:
        lut = np.zeros(256)
        for m in self.entries:
            lut[m.code] = m.absorption
        return lut

    def reflectivity_lut(self) -> np.ndarray:
        """Energy fraction kept per reflection, indexed by material code."""
        return 1.0 - self.absorption_lut()

    def with_absorption(self, fn) -> "MaterialTable":
        return MaterialTable(tuple(
            m if m.code == 0 else Material(m.code, m.name, float(fn(m.absorption)))
            for m in self.entries))

    def to_list(self) -> list[dict]:
        return [{"code": m.code, "name": m.name, "absorption": m.absorption}
                for m in self.entries if m.code != 0]


@dataclass(frozen=True, eq=False)
class GridMap:
    id: str
    cells: np.ndarray  # (height, width) uint8 material codes
    materials: MaterialTable
    cell_size: float = 0.25
    _free_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2 or cells.size == 0:
            raise MapError("empty map")
        if not self.cell_size > 0:
            raise MapError("cell_size must be positive")
        unknown = sorted(set(np.unique(cells).tolist()) - {m.code for m in self.materials.entries})
        if unknown:
            raise MapError(f"unknown material code(s) {unknown}")
        free = np.flatnonzero(cells.ravel() == 0)
        if free.size == 0:
            raise MapError("map has no traversable cell")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "_free_index", free)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        return self.width * self.cell_size, self.height * self.cell_size

    @property
    def free_cells(self) -> np.ndarray:
        """Flat indices (iy * width + ix) of traversable cells, ascending."""
        return self._free_index

    def in_bounds(self, p) -> bool:
        wx, wy = self.extent
        return 0.0 <= p[0] <= wx and 0.0 <= p[1] <= wy

    def cell_of(self, p) -> tuple[int, int]:
        """(ix, iy) owning pose ``p``; floor mapping, max edge clamps to the last cell."""
        if not self.in_bounds(p):
            raise MapError(f"pose {tuple(p)} outside map {self.id!r}")
        ix = min(int(math.floor(p[0] / self.cell_size)), self.width - 1)
        iy = min(int(math.floor(p[1] / self.cell_size)), self.height - 1)
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> Pose2:
        return Pose2((ix + 0.5) * self.cell_size, (iy + 0.5) * self.cell_size)

    def center_of_index(self, flat: int) -> Pose2:
        iy, ix = divmod(int(flat), self.width)
        return self.cell_center(ix, iy)

    def code_at(self, p) -> int:
        ix, iy = self.cell_of(p)
        return int(self.cells[iy, ix])

    def with_materials(self, materials: MaterialTable) -> "GridMap":
        return GridMap(self.id, self.cells, materials, self.cell_size)

    def to_dict(self) -> dict:
        d = {"id": self.id, "cell_size": self.cell_size, "width": self.width,
             "height": self.height, "materials": self.materials.to_list()}
        if int(self.cells.max()) <= 9:
            d["rows"] = ["".join(str(int(c)) for c in row) for row in self.cells]
        else:
            d["cells"] = self.cells.tolist()
        return d


def parse_map(doc: dict, source: str = "<map>") -> GridMap:
    def need(key, kind):
        if key not in doc:
            raise MapError(f"{source}: missing field {key!r}")
        try:
            return kind(doc[key])
        except (TypeError, ValueError) as exc:
            raise MapError(f"{source}: field {key!r}: {exc}") from None

    width = need("width", int)
    height = need("height", int)
    cell_size = float(doc.get("cell_size", 0.25))
    if width <= 0 or height <= 0:
        raise MapError(f"{source}: empty map ({width}x{height})")
    try:
        materials = MaterialTable.from_list(doc.get("materials", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise MapError(f"{source}: materials: {exc}") from None

    if "rows" in doc:
        rows = doc["rows"]
        if len(rows) != height:
            raise MapError(f"{source}: expected {height} rows, got {len(rows)}")
        grid = np.zeros((height, width), dtype=np.uint8)
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MapError(f"{source}: row {i} has {len(row)} cells, expected {width}")
            if not row.isdigit():
                raise MapError(f"{source}: row {i} contains non-digit characters")
            grid[i] = [int(ch) for ch in row]
    elif "cells" in doc:
        arr = np.asarray(doc["cells"])
        if arr.shape != (height, width):
            raise MapError(f"{source}: cells shape {arr.shape} != ({height}, {width})")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise MapError(f"{source}: cell codes must be in 0..255")
        grid = arr.astype(np.uint8)
    else:
        raise MapError(f"{source}: needs 'rows' or 'cells'")

    return GridMap(str(doc.get("id", Path(source).stem)), grid, materials, cell_size)


def load_map(path) -> tuple[GridMap, MaterialTable]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MapError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise MapError(f"{path}: top level must be an object")
    grid = parse_map(doc, str(path))
    return grid, grid.materials


def save_map(grid: GridMap, path) -> None:
    Path(path).write_text(json.dumps(grid.to_dict(), indent=1) + "\n", encoding="utf-8")


def is_traversable(grid: GridMap, p) -> bool:
    return grid.code_at(p) == 0


def line_of_sight(grid: GridMap, a, b) -> bool:
    if not (grid.in_bounds(a) and grid.in_bounds(b)):
        raise MapError("line_of_sight endpoints must lie inside the map")
    return bool(kernels.segment_clear(grid.cells, grid.cell_size,
                                      float(a[0]), float(a[1]), float(b[0]), float(b[1])))


def sampling_centers(grid: GridMap, n: int = N_CENTERS) -> list[Pose2]:
    """A ceil(sqrt(n)) x ceil(sqrt(n)) lattice of cell centers spread over the map."""
    k = math.ceil(math.sqrt(n))
    centers = []
    for j in range(k):
        iy = min(int((j + 0.5) * grid.height / k), grid.height - 1)
        for i in range(k):
            ix = min(int((i + 0.5) * grid.width / k), grid.width - 1)
            centers.append(grid.cell_center(ix, iy))
    return centers


def _sample_in_disk(grid, rng, center, radius, max_retries):
    wx, wy = grid.extent
    x0, x1 = max(0.0, center[0] - radius), min(wx, center[0] + radius)
    y0, y1 = max(0.0, center[1] - radius), min(wy, center[1] + radius)
    for _ in range(max_retries):
        x = rng.uniform(x0, x1)
        y = rng.uniform(y0, y1)
        if (x - center[0]) ** 2 + (y - center[1]) ** 2 > radius * radius:
            continue
        ix, iy = grid.cell_of((x, y))
        if grid.cells[iy, ix] != 0:
            continue
        p = grid.cell_center(ix, iy)
        # snapping to the cell center can push a point just outside the disk
        if p.distance(Pose2(*center)) <= radius:
            return p
    return None


def sample_pair(grid: GridMap, rng: np.random.Generator, max_retries: int = 1000,
                source_radius: float = SOURCE_RADIUS,
                listener_radius: float = LISTENER_RADIUS) -> tuple[Pose2, Pose2]:
    """Draw a (source, listener) pair of traversable cell centers.

    The source is drawn near one of ~100 lattice centers, the listener within
    ``listener_radius`` of the source.
    """
    centers = sampling_centers(grid)
    for _ in range(max_retries):
        center = centers[int(rng.integers(len(centers)))]
        src = _sample_in_disk(grid, rng, center, source_radius, max_retries)
        if src is None:
            continue
        lst = _sample_in_disk(grid, rng, src, listener_radius, max_retries)
        if lst is not None:
            return src, lst
    raise SamplingExhausted(f"no valid pair on map {grid.id!r} after {max_retries} retries")
