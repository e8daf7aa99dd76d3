"""Spatiotemporal angle of regions on X-T and Y-T slices.

On a spatiotemporal slice rows are time and columns are space. A region's
angle is taken between the line joining the centers of its last and first
occupied rows and the positive spatial axis: 90 degrees means no motion,
smaller angles mean leftward (upward) motion, larger ones rightward
(downward) motion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .segmentation import LabelMap, Region, Segmentation

STATIC_ANGLE = 90.0
DISPLACEMENT_EPS = 1e-9


@dataclass(frozen=True)
class RegionAngle:
    region_id: int
    phi_st: float  # degrees in [0, 180]


def angle_from_displacement(displacement: float, h: float) -> float:
    if h <= 0 or abs(displacement) <= DISPLACEMENT_EPS:
        return STATIC_ANGLE
    return math.degrees(math.atan2(h, displacement))


def spatiotemporal_angle(region: Region, label_map: LabelMap) -> RegionAngle:
    labels = label_map.labels
    first, last = region.first_row, region.last_row
    c_first = np.flatnonzero(labels[first] == region.id).mean()
    c_last = np.flatnonzero(labels[last] == region.id).mean()
    phi = angle_from_displacement(float(c_first - c_last), last - first)
    return RegionAngle(region.id, phi)


def slice_angles(seg: Segmentation) -> np.ndarray:
    """Angles of all regions of one slice, indexed by region id."""
    labels = seg.labels
    n = len(seg.regions)
    rows_n, cols_n = labels.shape
    top = np.array([r.first_row for r in seg.regions])
    bottom = np.array([r.last_row for r in seg.regions])
    flat = labels.ravel()
    rows, cols = np.divmod(np.arange(flat.size), cols_n)
    in_top = rows == top[flat]
    in_bottom = rows == bottom[flat]
    c_first = (np.bincount(flat[in_top], weights=cols[in_top], minlength=n)
               / np.bincount(flat[in_top], minlength=n))
    c_last = (np.bincount(flat[in_bottom], weights=cols[in_bottom], minlength=n)
              / np.bincount(flat[in_bottom], minlength=n))
    disp = c_first - c_last
    h = (bottom - top).astype(np.float64)
    phi = np.degrees(np.arctan2(h, disp))
    phi[(h == 0) | (np.abs(disp) <= DISPLACEMENT_EPS)] = STATIC_ANGLE
    return phi


def angles_for_stack(segmentations: Sequence[Segmentation]) -> list[np.ndarray]:
    """Per-slice angle arrays; element ``i`` of each array belongs to region ``i``."""
    return [slice_angles(seg) for seg in segmentations]


def render_angle_map(seg: Segmentation, angles: np.ndarray) -> np.ndarray:
    """Grayscale image of a slice with each region painted by its angle
    (0 deg black, 90 deg mid-gray, 180 deg white)."""
    gray = np.rint(np.asarray(angles) / 180.0 * 255.0).astype(np.uint8)
    return gray[seg.labels]
