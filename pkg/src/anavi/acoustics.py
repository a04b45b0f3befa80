"""Grid ray tracer producing time-binned intensity at a listener, and the
intensity -> decibel -> normalized label conversion.

Energy is reported in W/m^2 for a source emitting 1 W/m^2 at 1 m, spreading
as 1/d^2. The direct path is added analytically; reflected energy is
estimated by casting evenly spaced rays (one random angular offset per trace)
that reflect specularly off solid cells and are captured when they pass within
``listener_radius`` of the listener.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .gridmap import GridMap, MaterialTable, MapError, line_of_sight

I_MIN = 1e-12
I_MAX = 10 ** 0.8
DB_OFFSET = 120.0
DB_FULL_SCALE = 128.0


@dataclass(frozen=True)
class AcousticConfig:
    n_rays: int = 4096
    max_bounces: int = 20
    energy_floor: float = 1e-9
    listener_radius: float = 0.25
    air_density: float = 1.225
    sound_speed: float = 343.0
    bin_width: float = 0.001
    max_time: float = 0.2
    source_intensity: float = 1.0

    def __post_init__(self):
        if self.n_rays < 1:
            raise ValueError("n_rays must be >= 1")
        if self.max_bounces < 0:
            raise ValueError("max_bounces must be >= 0")
        for name in ("listener_radius", "air_density", "sound_speed", "bin_width",
                     "max_time", "energy_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.source_intensity != 1.0:
            raise ValueError("source_intensity is fixed at 1 W/m^2")

    @property
    def n_bins(self) -> int:
        return int(math.ceil(self.max_time / self.bin_width - 1e-9))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AcousticConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class ImpulseHistogram:
    bin_width: float
    bins: np.ndarray
    total_paths: int

    @property
    def i_max(self) -> float:
        return float(self.bins.max()) if self.bins.size else 0.0

    def times(self) -> np.ndarray:
        return np.arange(self.bins.size) * self.bin_width

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_bin_s", "intensity"])
            for t, v in zip(self.times(), self.bins):
                w.writerow([repr(float(t)), repr(float(v))])


@dataclass(frozen=True)
class DbLabel:
    db_max: float
    y: float


def direct_intensity(distance: float, cfg: AcousticConfig) -> float:
    d = max(distance, cfg.listener_radius)
    return cfg.source_intensity / (d * d)


def trace_impulse(grid: GridMap, materials: MaterialTable | None, source, listener,
                  cfg: AcousticConfig, rng: np.random.Generator,
                  backend=None) -> ImpulseHistogram:
    """Impulse histogram at ``listener`` for a unit impulse at ``source``."""
    materials = grid.materials if materials is None else materials
    for name, p in (("source", source), ("listener", listener)):
        if grid.code_at(p) != 0:
            raise MapError(f"{name} {tuple(p)} is not traversable")
    bins = np.zeros(cfg.n_bins)
    paths = 0

    dist = math.hypot(listener[0] - source[0], listener[1] - source[1])
    if line_of_sight(grid, source, listener):
        d = max(dist, cfg.listener_radius)
        b = int(d / cfg.sound_speed / cfg.bin_width)
        if b < bins.size:
            bins[b] += direct_intensity(dist, cfg)
            paths += 1

    jitter = float(rng.uniform(0.0, 2.0 * math.pi / cfg.n_rays))
    impl = kernels.get_backend(backend)
    paths += impl.trace_reflections(
        grid.cells, np.ascontiguousarray(materials.reflectivity_lut()), grid.cell_size,
        float(source[0]), float(source[1]), float(listener[0]), float(listener[1]),
        cfg.n_rays, jitter, cfg.max_bounces, cfg.energy_floor, cfg.listener_radius,
        cfg.sound_speed, cfg.bin_width, bins)
    return ImpulseHistogram(cfg.bin_width, bins, int(paths))


def intensity_to_label(i_max: float) -> DbLabel:
    i = min(max(float(i_max), I_MIN), I_MAX)
    db = 10.0 * math.log10(i) + DB_OFFSET
    # log10 of the clip bounds is not exact in floating point
    db = min(max(db, 0.0), DB_FULL_SCALE)
    return DbLabel(db, db / DB_FULL_SCALE)


def histogram_to_label(h: ImpulseHistogram) -> DbLabel:
    return intensity_to_label(h.i_max)


def heuristic_db(r: float) -> DbLabel:
    """Inverse-square distance law: -20 log10(r) + 120, clamped to [0, 128]."""
    if not r > 0:
        raise ValueError(f"distance must be positive, got {r}")
    db = min(max(-20.0 * math.log10(r) + DB_OFFSET, 0.0), DB_FULL_SCALE)
    return DbLabel(db, db / DB_FULL_SCALE)


def scale_action_db(y: float, source_db: float) -> float:
    """Loudness at the listener of an action emitting ``source_db`` at the robot."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"normalized level {y} outside [0, 1]")
    if not source_db > 0:
        raise ValueError(f"source level must be positive, got {source_db}")
    return y * source_db
