"""Noise-aware A* planning over 8-connected grid cells.

Each move picks an action (speed, loudness). A move into cell c with action a
takes ``dt = step_length / a.speed`` and costs ``dt * (1 + lambda * noise)``,
where ``noise`` sums each listener's weighted loudness above their threshold,
as predicted for the robot at c.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acoustics import AcousticConfig, histogram_to_label, scale_action_db, trace_impulse
from .acousticmap import effective_polar
from .gridmap import LISTENER_RADIUS as R_MAX
from .gridmap import GridMap, MaterialTable, Pose2
from .sensing import build_features, scan_panorama

NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


class PlanningError(ValueError):
    pass


class NoPath(PlanningError):
    pass


@dataclass(frozen=True)
class ActionProfile:
    name: str
    speed: float
    source_db: float

    def __post_init__(self):
        if not self.speed > 0:
            raise PlanningError(f"action {self.name!r}: speed must be positive")
        if not 0 < self.source_db <= 128:
            raise PlanningError(f"action {self.name!r}: source_db must be in (0, 128]")


@dataclass(frozen=True)
class Listener:
    pose: Pose2
    weight: float = 1.0
    threshold_db: float = 0.0

    def __post_init__(self):
        if self.weight < 0 or self.threshold_db < 0:
            raise PlanningError("listener weight and threshold must be >= 0")


@dataclass
class PlanProblem:
    grid: GridMap
    start: Pose2
    goal: Pose2
    listeners: list
    actions: list
    lam: float
    model: object
    materials: MaterialTable | None = None
    _y_cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if not self.actions:
            raise PlanningError("need at least one action")
        if self.lam < 0:
            raise PlanningError("lambda must be >= 0")
        for name, p in (("start", self.start), ("goal", self.goal)):
            if self.grid.code_at(p) != 0:
                raise PlanningError(f"{name} {tuple(p)} is not traversable")

    def listener_levels(self, cell) -> tuple:
        """Predicted normalized level y at each listener for the robot at ``cell``
        (None beyond the 10 m model support). Memoized per problem."""
        if cell not in self._y_cache:
            center = self.grid.cell_center(*cell)
            scan = None
            ys = []
            for lst in self.listeners:
                if center.distance(lst.pose) > R_MAX:
                    ys.append(None)
                    continue
                if scan is None and self.model.input_layout != "dirdist":
                    scan = scan_panorama(self.grid, self.materials, center)
                r, theta = effective_polar(self.grid, center, lst.pose)
                ys.append(self.model.predict(build_features(scan, r, theta, self.model.input_layout)))
            self._y_cache[cell] = tuple(ys)
        return self._y_cache[cell]


@dataclass
class Plan:
    cells: list  # (ix, iy) from start to goal inclusive
    steps: list  # (to_cell, action name) per move
    total_time: float
    total_noise_cost: float
    per_listener_trace: list  # per listener: predicted dB at each step
    cost: float = 0.0

    def to_dict(self) -> dict:
        return {"cells": [list(c) for c in self.cells],
                "steps": [{"cell": list(c), "action": a} for c, a in self.steps],
                "total_time": self.total_time, "total_noise_cost": self.total_noise_cost,
                "cost": self.cost, "per_listener_trace": [list(t) for t in self.per_listener_trace]}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def node_noise(problem: PlanProblem, cell, action: ActionProfile) -> list:
    """Predicted dB at each listener with the robot at ``cell`` doing ``action``."""
    if problem.grid.cells[cell[1], cell[0]] != 0:
        raise PlanningError(f"cell {cell} is not traversable")
    return [0.0 if y is None else scale_action_db(y, action.source_db)
            for y in problem.listener_levels(cell)]


def noise_level(problem: PlanProblem, cell, action: ActionProfile) -> float:
    return sum(l.weight * max(0.0, db - l.threshold_db)
               for l, db in zip(problem.listeners, node_noise(problem, cell, action)))


def step_length(grid: GridMap, a, b) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    if max(dx, dy) != 1:
        raise PlanningError(f"cells {a} and {b} are not 8-adjacent")
    return grid.cell_size * (math.sqrt(2.0) if dx and dy else 1.0)


def move_allowed(grid: GridMap, a, b) -> bool:
    """Both cells free and in bounds; diagonal moves may not cut a blocked corner."""
    h, w = grid.cells.shape
    if not (0 <= b[0] < w and 0 <= b[1] < h) or grid.cells[b[1], b[0]] != 0:
        return False
    if a[0] != b[0] and a[1] != b[1]:
        if grid.cells[a[1], b[0]] != 0 and grid.cells[b[1], a[0]] != 0:
            return False
    return True


def edge_terms(problem: PlanProblem, a, b, action: ActionProfile) -> tuple[float, float]:
    """(dt, noise) of moving a -> b with ``action``."""
    if not move_allowed(problem.grid, a, b):
        raise PlanningError(f"move {a} -> {b} is blocked")
    dt = step_length(problem.grid, a, b) / action.speed
    return dt, noise_level(problem, b, action)


def edge_cost(problem: PlanProblem, a, b, action: ActionProfile) -> float:
    dt, noise = edge_terms(problem, a, b, action)
    return dt + problem.lam * noise * dt


def best_action(problem: PlanProblem, a, b) -> tuple[float, ActionProfile]:
    """Cheapest action for the move; ties go to the earlier action."""
    best = None
    for act in problem.actions:
        c = edge_cost(problem, a, b, act)
        if best is None or c < best[0]:
            best = (c, act)
    return best


def neighbors(grid: GridMap, cell):
    for dx, dy in NEIGHBORS:
        nb = (cell[0] + dx, cell[1] + dy)
        if move_allowed(grid, cell, nb):
            yield nb


def plan(problem: PlanProblem) -> Plan:
    grid = problem.grid
    start = grid.cell_of(problem.start)
    goal = grid.cell_of(problem.goal)
    vmax = max(a.speed for a in problem.actions)
    gx, gy = grid.cell_center(*goal)

    def h(c):
        x, y = grid.cell_center(*c)
        return math.hypot(x - gx, y - gy) / vmax

    def index(c):
        return c[1] * grid.width + c[0]

    g = {start: 0.0}
    parent = {start: None}
    closed = set()
    heap = [(h(start), index(start), start)]
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal:
            break
        closed.add(cur)
        for nb in neighbors(grid, cur):
            if nb in closed:
                continue
            c, act = best_action(problem, cur, nb)
            cand = g[cur] + c
            if cand < g.get(nb, math.inf):
                g[nb] = cand
                parent[nb] = (cur, act)
                heapq.heappush(heap, (cand + h(nb), index(nb), nb))
    if goal not in g:
        raise NoPath(f"goal {problem.goal} unreachable from {problem.start}")

    moves = []
    c = goal
    while parent[c] is not None:
        prev, act = parent[c]
        moves.append((prev, c, act))
        c = prev
    moves.reverse()
    return assemble_plan(problem, start, moves)


def assemble_plan(problem: PlanProblem, start, moves) -> Plan:
    """Build a Plan (totals and listener traces) from (from, to, action) moves."""
    cells = [start] + [b for _, b, _ in moves]
    total_time = total_noise = cost = 0.0
    traces = [[] for _ in problem.listeners]
    for a, b, act in moves:
        dt, noise = edge_terms(problem, a, b, act)
        total_time += dt
        total_noise += noise * dt
        cost += dt + problem.lam * noise * dt
        for trace, db in zip(traces, node_noise(problem, b, act)):
            trace.append(db)
    return Plan(cells, [(b, act.name) for _, b, act in moves], total_time, total_noise, traces, cost)


def simulate_plan_audio(problem: PlanProblem, plan_: Plan, cfg: AcousticConfig | None = None,
                        seed: int = 0) -> list:
    """Traced (ground-truth) dB at each listener for every step of the plan."""
    cfg = cfg or AcousticConfig()
    actions = {a.name: a for a in problem.actions}
    traces = [[] for _ in problem.listeners]
    for k, (cell, name) in enumerate(plan_.steps):
        center = problem.grid.cell_center(*cell)
        for j, lst in enumerate(problem.listeners):
            rng = np.random.default_rng([seed, k, j])
            h = trace_impulse(problem.grid, problem.materials, center, lst.pose, cfg, rng)
            traces[j].append(scale_action_db(histogram_to_label(h).y, actions[name].source_db))
    return traces


def load_actions(path) -> list:
    data = json.loads(Path(path).read_text())
    try:
        return [ActionProfile(str(d["name"]), float(d["speed"]), float(d["source_db"])) for d in data]
    except (KeyError, TypeError) as exc:
        raise PlanningError(f"{path}: bad action entry: {exc}") from None


def default_actions() -> list:
    return load_actions(Path(__file__).with_name("data") / "actions.json")
