"""Supervised samples: generation, JSONL serialization, split bookkeeping."""

from __future__ import annotations

import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .acoustics import AcousticConfig, histogram_to_label, trace_impulse
from .gridmap import GridMap, Pose2, SamplingExhausted, sample_pair
from .sensing import PanoramaScan, build_features, polar, scan_panorama

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SPLITS = ("train", "val", "test")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Sample:
    map_id: str
    source: Pose2
    listener: Pose2
    r: float
    theta: float
    scan: PanoramaScan
    y: float
    db_max: float

    def features(self, layout: str):
        return build_features(self.scan, self.r, self.theta, layout)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "map_id": self.map_id,
                "source": list(self.source), "listener": list(self.listener),
                "r": self.r, "theta": self.theta, "y": self.y, "db_max": self.db_max,
                "scan": self.scan.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Sample":
        return cls(d["map_id"], Pose2(*d["source"]), Pose2(*d["listener"]), float(d["r"]),
                   float(d["theta"]), PanoramaScan.from_dict(d["scan"]), float(d["y"]),
                   float(d["db_max"]))

    def __eq__(self, other):
        return isinstance(other, Sample) and self.to_dict() == other.to_dict()


@dataclass
class DatasetManifest:
    split: str
    map_ids: list
    samples_per_map: int
    seed: int
    acoustic_cfg: AcousticConfig

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DatasetError(f"unknown split {self.split!r}")
        if self.samples_per_map <= 0:
            raise DatasetError("samples_per_map must be positive")

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "split": self.split,
                "map_ids": list(self.map_ids), "samples_per_map": self.samples_per_map,
                "seed": self.seed, "acoustic_cfg": self.acoustic_cfg.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(d["split"], d["map_ids"], d["samples_per_map"], d["seed"],
                   AcousticConfig.from_dict(d["acoustic_cfg"]))


def check_split_hygiene(manifests: Iterable[DatasetManifest]) -> None:
    owner = {}
    for m in manifests:
        for mid in m.map_ids:
            if owner.setdefault(mid, m.split) != m.split:
                raise DatasetError(f"map {mid!r} appears in both {owner[mid]} and {m.split}")


def sample_rng(seed: int, map_id: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(map_id.encode()), index])


PAIR_RETRIES = 100


def make_sample(grid: GridMap, seed: int, index: int, cfg: AcousticConfig) -> Sample:
    rng = sample_rng(seed, grid.id, index)
    for _ in range(PAIR_RETRIES):
        source, listener = sample_pair(grid, rng)
        if source != listener:
            break
    else:
        raise SamplingExhausted(f"map {grid.id!r}: only coincident source/listener pairs")
    r, theta = polar(source, listener)
    scan = scan_panorama(grid, None, source)
    label = histogram_to_label(trace_impulse(grid, None, source, listener, cfg, rng))
    return Sample(grid.id, source, listener, r, theta, scan, label.y, label.db_max)


def _job(args):
    grid, seed, index, cfg = args
    return make_sample(grid, seed, index, cfg)


def generate(maps: list[GridMap], per_map: int, seed: int,
             cfg: AcousticConfig | None = None, jobs: int = 1) -> Iterator[Sample]:
    """Yield ``per_map`` samples per map, in map order then index order."""
    if per_map < 1:
        raise DatasetError("per_map must be >= 1")
    cfg = cfg or AcousticConfig()
    tasks = [(g, seed, i, cfg) for g in maps for i in range(per_map)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            yield from pool.map(_job, tasks, chunksize=64)
    else:
        for t in tasks:
            yield _job(t)


def write_dataset(path, samples: Iterable[Sample]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict(), separators=(",", ":")) + "\n")
            n += 1
    return n


def iter_dataset(path) -> Iterator[Sample]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed record ({exc.msg})") from None
            version = d.get("schema_version")
            if version != SCHEMA_VERSION:
                raise DatasetError(
                    f"{path}:{lineno}: schema_version {version} unsupported "
                    f"(expected {SCHEMA_VERSION}); regenerate with `anavi gen-data`")
            try:
                yield Sample.from_dict(d)
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: bad record: {exc}") from None


def read_dataset(path) -> list[Sample]:
    return list(iter_dataset(path))


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name.removesuffix(".jsonl") + ".manifest.json")


def write_manifest(path, manifest: DatasetManifest) -> None:
    manifest_path(path).write_text(json.dumps(manifest.to_dict(), indent=1) + "\n")


def read_manifest(path) -> DatasetManifest:
    return DatasetManifest.from_dict(json.loads(manifest_path(path).read_text()))


def arrays(samples: list[Sample], layout: str) -> tuple[np.ndarray, np.ndarray]:
    """Stacked feature matrix and label vector."""
    if not samples:
        raise DatasetError("empty dataset")
    X = np.stack([s.features(layout).values for s in samples])
    y = np.array([s.y for s in samples])
    return X, y


def validate(samples: Iterable[Sample]) -> None:
    for s in samples:
        if not 0.0 < s.r <= 10.0:
            raise DatasetError(f"r={s.r} outside (0, 10]")
        if abs(s.r - s.source.distance(s.listener)) > 1e-9:
            raise DatasetError("r does not match source/listener distance")
        if not 0.0 <= s.y <= 1.0 or not 0.0 <= s.theta < 2 * math.pi:
            raise DatasetError("label or direction out of range")
