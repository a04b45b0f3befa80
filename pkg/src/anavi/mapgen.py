"""Builders for the bundled fixture maps and seeded procedural floor plans."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gridmap import GridMap, MaterialTable, save_map

STANDARD_MATERIALS = MaterialTable.from_list([
    {"code": 1, "name": "concrete", "absorption": 0.05},
    {"code": 2, "name": "drywall", "absorption": 0.15},
    {"code": 3, "name": "wood", "absorption": 0.3},
    {"code": 4, "name": "glass", "absorption": 0.08},
    {"code": 5, "name": "fabric", "absorption": 0.6},
    {"code": 6, "name": "brick", "absorption": 0.1},
    {"code": 7, "name": "acoustic_foam", "absorption": 0.9},
    {"code": 8, "name": "anechoic", "absorption": 1.0},
])

CONCRETE, DRYWALL, WOOD, GLASS, FABRIC, BRICK, FOAM, ANECHOIC = range(1, 9)
WALL_MATERIALS = (CONCRETE, DRYWALL, DRYWALL, BRICK, GLASS)
FURNITURE_MATERIALS = (WOOD, WOOD, FABRIC, FOAM)

SPLIT_COUNTS = {"train": 10, "val": 2, "test": 3}


def _materials_for(cells: np.ndarray) -> MaterialTable:
    used = set(np.unique(cells).tolist()) - {0}
    return MaterialTable(tuple(m for m in STANDARD_MATERIALS.entries if m.code in used))


def _make(map_id, cells):
    return GridMap(map_id, cells, _materials_for(cells))


def _border(cells, code=CONCRETE):
    cells[0, :] = cells[-1, :] = code
    cells[:, 0] = cells[:, -1] = code


def free_field() -> GridMap:
    return _make("freefield", np.zeros((80, 80), np.uint8))


def single_wall() -> GridMap:
    cells = np.zeros((40, 80), np.uint8)
    cells[20, 8:72] = CONCRETE
    return _make("singlewall", cells)


def two_room() -> GridMap:
    """Two rooms joined by a door gap; the left room holds a free-standing
    separator panel with passages at both ends."""
    cells = np.zeros((20, 40), np.uint8)
    _border(cells)
    cells[1:19, 26] = DRYWALL
    cells[8:12, 26] = 0  # door gap, 1 m
    cells[9, 5:22] = DRYWALL  # separator panel
    return _make("tworoom", cells)


def corridor() -> GridMap:
    cells = np.zeros((8, 60), np.uint8)
    _border(cells)
    return _make("corridor", cells)


def cross_intersection() -> GridMap:
    """Two 1.5 m corridors crossing at the center, closed rooms in the corners."""
    n = 48
    lo, hi = 20, 27  # corridors occupy rows/cols lo+1 .. hi-1
    cells = np.full((n, n), CONCRETE, np.uint8)
    cells[lo + 1:hi, 1:n - 1] = 0
    cells[1:n - 1, lo + 1:hi] = 0
    for rs in (slice(1, lo), slice(hi + 1, n - 1)):
        for cs in (slice(1, lo), slice(hi + 1, n - 1)):
            cells[rs, cs] = 0
    return _make("cross", cells)


def apartment() -> GridMap:
    cells = np.zeros((40, 48), np.uint8)
    _border(cells, BRICK)
    cells[1:39, 20] = DRYWALL          # living | bedrooms
    cells[20, 20:47] = DRYWALL         # bedroom 1 | bedroom 2
    cells[1:20, 34] = DRYWALL          # bathroom
    cells[28:32, 20] = 0               # door living -> bedroom 2
    cells[8:12, 20] = 0                # door living -> bedroom 1
    cells[20, 38:42] = 0               # door bedroom 1 -> bedroom 2
    cells[12:16, 34] = 0               # bathroom door
    cells[26:34, 5:12] = FABRIC        # sofa
    cells[4:8, 6:14] = WOOD            # table
    cells[24:30, 36:44] = FABRIC       # bed
    cells[2:6, 38:45] = GLASS          # shower screen
    cells[30:39, 46] = GLASS           # window strip
    return _make("apartment", cells)


FIXTURES = {
    "freefield": free_field,
    "singlewall": single_wall,
    "tworoom": two_room,
    "corridor": corridor,
    "cross": cross_intersection,
    "apartment": apartment,
}


# Small grids for exhaustive planner checks.
PLANNING_GRIDS = {
    "open5": ["00000", "00000", "00000", "00000", "00000"],
    "tworoom5": ["00000", "01110", "00000", "00010", "00000"],
    "wall6": ["000000", "011110", "000010", "010010", "010000", "000000"],
    "rooms7": ["0000000", "0001000", "0001000", "0000000", "1101011", "0000000", "0000100"],
    "maze8": ["00000000", "01111010", "00000010", "01101110", "01000000",
              "01011110", "00010000", "11000100"],
}


def planning_grid(name: str) -> GridMap:
    rows = PLANNING_GRIDS[name]
    cells = np.array([[int(c) for c in row] for row in rows], np.uint8) * DRYWALL
    return _make(name, cells)


def procedural(seed: int, map_id: str | None = None) -> GridMap:
    """Recursive-division floor plan with doors and furniture."""
    rng = np.random.default_rng([seed, 0xA11A])
    w = int(rng.integers(40, 57))
    h = int(rng.integers(40, 57))
    cells = np.zeros((h, w), np.uint8)
    _border(cells, CONCRETE if rng.random() < 0.5 else BRICK)
    rooms = []

    def divide(x0, y0, x1, y1, depth):
        # interior x0..x1-1, y0..y1-1
        rw, rh = x1 - x0, y1 - y0
        big = max(rw, rh) >= 20
        if depth > 4 or max(rw, rh) < 14 or (not big and rng.random() < 0.35):
            rooms.append((x0, y0, x1, y1))
            return
        material = WALL_MATERIALS[int(rng.integers(len(WALL_MATERIALS)))]
        vertical = rw > rh if rw != rh else bool(rng.random() < 0.5)
        span = (x0, x1) if vertical else (y0, y1)
        cut = int(rng.integers(span[0] + 6, span[1] - 6))
        lo, hi = (y0, y1) if vertical else (x0, x1)
        door_w = int(rng.integers(3, 6))
        n_doors = 1 if rng.random() < 0.7 else 2
        wall = np.full(hi - lo, material, np.uint8)
        for _ in range(n_doors):
            d0 = int(rng.integers(0, max(1, hi - lo - door_w)))
            wall[d0:d0 + door_w] = 0
        if vertical:
            cells[lo:hi, cut] = wall
            divide(x0, y0, cut, y1, depth + 1)
            divide(cut + 1, y0, x1, y1, depth + 1)
        else:
            cells[cut, lo:hi] = wall
            divide(x0, y0, x1, cut, depth + 1)
            divide(x0, cut + 1, x1, y1, depth + 1)

    divide(1, 1, w - 1, h - 1, 0)

    for x0, y0, x1, y1 in rooms:
        for _ in range(int(rng.integers(0, 3))):
            fw = int(rng.integers(2, 7))
            fh = int(rng.integers(2, 5))
            if x1 - x0 < fw + 4 or y1 - y0 < fh + 4:
                continue
            fx = int(rng.integers(x0 + 2, x1 - fw - 1))
            fy = int(rng.integers(y0 + 2, y1 - fh - 1))
            cells[fy:fy + fh, fx:fx + fw] = FURNITURE_MATERIALS[int(rng.integers(len(FURNITURE_MATERIALS)))]
    return _make(map_id or f"proc{seed:03d}", cells)


def split_maps(seed: int = 0) -> dict[str, list[GridMap]]:
    """Procedural maps for train/val/test; splits are disjoint by construction."""
    out, k = {}, 0
    for split, count in SPLIT_COUNTS.items():
        maps = []
        for _ in range(count):
            maps.append(procedural(seed * 1000 + k, f"{split}_{k:02d}"))
            k += 1
        out[split] = maps
    return out


def write_maps(out_dir, seed: int = 0, fixtures: bool = True) -> dict:
    """Write procedural split maps (and optionally the named fixtures) as JSON.

    Returns the split index that is also written to ``splits.json``.
    """
    out_dir = Path(out_dir)
    index = {}
    for split, maps in split_maps(seed).items():
        d = out_dir / split
        d.mkdir(parents=True, exist_ok=True)
        for m in maps:
            save_map(m, d / f"{m.id}.json")
        index[split] = [m.id for m in maps]
    if fixtures:
        d = out_dir / "fixtures"
        d.mkdir(parents=True, exist_ok=True)
        for name, build in FIXTURES.items():
            save_map(build(), d / f"{name}.json")
        d = out_dir / "planning"
        d.mkdir(parents=True, exist_ok=True)
        for name in PLANNING_GRIDS:
            save_map(planning_grid(name), d / f"{name}.json")
    (out_dir / "splits.json").write_text(json.dumps({"seed": seed, **index}, indent=1) + "\n")
    return index
