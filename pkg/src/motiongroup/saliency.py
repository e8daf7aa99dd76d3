"""Bottom-up motion saliency on spatiotemporal slices and its projection
back onto the X-Y frames."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .segmentation import LabelMap, Region, Segmentation

WEIGHT_MODES = ("linear", "uniform", "proportional")


class NoFocusError(LookupError):
    """Every region of the frame is inhibited; no further FOA exists."""


@dataclass(frozen=True)
class SaliencyParams:
    # linear: 1 - d/diag (closer regions weigh more); proportional: d/diag;
    # uniform: 1
    weight_mode: str = "linear"
    normalize_by_region_count: bool = False

    def __post_init__(self):
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}")


@dataclass(frozen=True)
class FrameSaliency:
    t: int
    values: np.ndarray  # per X-Y region, indexed by region id
    suppressed: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.suppressed is None:
            object.__setattr__(self, "suppressed", np.zeros(len(self.values), dtype=bool))

    @property
    def foa_region(self) -> int | None:
        try:
            return select_foa(self)
        except NoFocusError:
            return None


def _weights(dist: np.ndarray, diag: float, mode: str) -> np.ndarray:
    if mode == "uniform":
        return np.ones_like(dist)
    frac = np.clip(dist / diag, 0.0, 1.0)
    return 1.0 - frac if mode == "linear" else frac


def distance_weight(r_i: Region, r_j: Region, slice_dims: tuple[int, int],
                    mode: str = "linear") -> float:
    """Weight of region j's contribution to region i; ``slice_dims`` is
    ``(width, height)``."""
    d = math.dist(r_i.centroid, r_j.centroid)
    return float(_weights(np.array(d), math.hypot(*slice_dims), mode))


def motion_saliency(seg: Segmentation, angles, params: SaliencyParams = SaliencyParams()) -> np.ndarray:
    """Per-region saliency of one slice: the weighted sum of normalized angle
    differences to every other region of the slice."""
    phi = np.asarray(angles, dtype=np.float64)
    n = len(seg.regions)
    if len(phi) != n:
        raise ValueError(f"{len(phi)} angles for {n} regions")
    if n < 2:
        return np.zeros(n)
    c = np.array([r.centroid for r in seg.regions])
    dist = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1))
    w = _weights(dist, math.hypot(seg.label_map.width, seg.label_map.height), params.weight_mode)
    np.fill_diagonal(w, 0.0)
    ms = (np.abs(phi[:, None] - phi[None, :]) / 180.0 * w).sum(axis=1)
    if params.normalize_by_region_count:
        ms /= n - 1
    return ms


def stack_saliency(segmentations: Sequence[Segmentation], angles: Sequence[np.ndarray],
                   params: SaliencyParams = SaliencyParams()) -> list[np.ndarray]:
    return [motion_saliency(s, a, params) for s, a in zip(segmentations, angles)]


def pad_values(values: Sequence[np.ndarray], fill: float = 0.0) -> np.ndarray:
    """Ragged per-slice arrays as one ``(n_slices, max_regions)`` table."""
    width = max((len(v) for v in values), default=0)
    out = np.full((len(values), max(width, 1)), fill, dtype=np.float64)
    for i, v in enumerate(values):
        out[i, :len(v)] = v
    return out


def _as_table(values) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.ndim == 2:
        return values
    return pad_values(values)


def _as_labels(label_maps) -> np.ndarray:
    if isinstance(label_maps, np.ndarray):
        return label_maps
    return np.stack([m.labels if isinstance(m, LabelMap) else
                     m.labels if isinstance(m, Segmentation) else m for m in label_maps])


def frame_lookup(t: int, xt_values, yt_values, xt_label_maps, yt_label_maps):
    """Per-pixel X-T and Y-T values seen by frame ``t``.

    Pixel ``(x, y)`` reads slice ``y`` of the X-T stack at ``(x, t)`` and
    slice ``x`` of the Y-T stack at ``(y, t)``. Returns two ``(H, W)`` arrays.
    """
    xt_tab, yt_tab = _as_table(xt_values), _as_table(yt_values)
    xt_lab, yt_lab = _as_labels(xt_label_maps), _as_labels(yt_label_maps)
    H, W = xt_lab.shape[0], yt_lab.shape[0]
    xt = xt_tab[np.arange(H)[:, None], xt_lab[:, t, :]]  # (H, W)
    yt = yt_tab[np.arange(W)[:, None], yt_lab[:, t, :]].T  # (W, H) -> (H, W)
    return xt, yt


def region_means(labels: np.ndarray, per_pixel: np.ndarray, n: int) -> np.ndarray:
    flat = labels.ravel()
    return np.bincount(flat, weights=per_pixel.ravel(), minlength=n) / np.bincount(flat, minlength=n)


def project_to_frame(t: int, xy_segmentation: Segmentation, xt_saliencies, yt_saliencies,
                     xt_label_maps, yt_label_maps, frame_index: int | None = None) -> FrameSaliency:
    """X-Y region saliency for frame ``t`` of the volume: the mean over the
    region's pixels of the average of their X-T and Y-T slice saliencies."""
    xt, yt = frame_lookup(t, xt_saliencies, yt_saliencies, xt_label_maps, yt_label_maps)
    values = region_means(xy_segmentation.labels, (xt + yt) * 0.5, len(xy_segmentation.regions))
    return FrameSaliency(t if frame_index is None else frame_index, values)


def select_foa(frame_saliency: FrameSaliency) -> int:
    """Most salient non-inhibited region; ties go to the lowest id."""
    eligible = ~frame_saliency.suppressed
    if not eligible.any():
        raise NoFocusError(f"frame {frame_saliency.t}: all regions are inhibited")
    return int(np.argmax(np.where(eligible, frame_saliency.values, -np.inf)))


def suppress(frame_saliency: FrameSaliency, region_ids) -> FrameSaliency:
    ids = np.fromiter(region_ids, dtype=np.int64)
    values = frame_saliency.values.copy()
    mask = frame_saliency.suppressed.copy()
    values[ids] = 0.0
    mask[ids] = True
    return replace(frame_saliency, values=values, suppressed=mask)


def render_saliency_map(frame_saliency: FrameSaliency, label_map) -> np.ndarray:
    """8-bit map with the frame maximum at 255; inhibited regions render 0."""
    labels = label_map.labels if isinstance(label_map, (LabelMap, Segmentation)) else label_map
    values = np.where(frame_saliency.suppressed, 0.0, frame_saliency.values)
    top = values.max() if len(values) else 0.0
    if top <= 0:
        return np.zeros(labels.shape, dtype=np.uint8)
    gray = np.floor(values / top * 255.0 + 0.5).astype(np.uint8)
    return gray[labels]
