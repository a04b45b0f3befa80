"""Acoustic noise prediction and noise-aware navigation on 2D grid maps."""

from .gridmap import GridMap, MaterialTable, Pose2, load_map

__version__ = "0.1.0"
