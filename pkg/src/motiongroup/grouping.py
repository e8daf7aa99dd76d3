"""Grouping of similarly moving regions around the focus of attention,
with object-based inhibition of return."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .saliency import FrameSaliency, NoFocusError, frame_lookup, region_means, select_foa, suppress
from .segmentation import Region

NOISE_MODES = ("and", "or")


@dataclass(frozen=True)
class MotionSignature:
    h_phi: float  # mean X-T angle, degrees
    v_phi: float  # mean Y-T angle, degrees


@dataclass(frozen=True)
class GroupingParams:
    tau: float | None = 44.0  # None switches the similarity test off
    sigma_xt: float = 10.0
    sigma_yt: float = 10.0
    eta: float = 1.5
    noise_mode: str = "or"
    cycles: int = 1

    def __post_init__(self):
        if self.tau is not None and self.tau <= 0:
            raise ValueError("tau must be > 0 (or None to disable)")
        if self.sigma_xt < 0 or self.sigma_yt < 0:
            raise ValueError("sigma thresholds must be >= 0")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")


@dataclass(frozen=True)
class ObjectSelection:
    t: int
    seed_region: int
    members: frozenset
    size: int
    mask: np.ndarray | None = None
    bbox: tuple[int, int, int, int] | None = None  # left, top, right, bottom

    def to_record(self) -> dict:
        return {
            "frame": self.t,
            "seed": self.seed_region,
            "members": sorted(self.members),
            "size": self.size,
            "bbox": list(self.bbox) if self.bbox is not None else None,
        }


def frame_signatures(t: int, xy_labels: np.ndarray, n: int, xt_angles, yt_angles,
                     xt_label_maps, yt_label_maps) -> np.ndarray:
    """``(n, 2)`` array of pixel-averaged (X-T, Y-T) angles per X-Y region."""
    xt, yt = frame_lookup(t, xt_angles, yt_angles, xt_label_maps, yt_label_maps)
    return np.stack([region_means(xy_labels, xt, n), region_means(xy_labels, yt, n)], axis=1)


def average_motion_signature(region: Region, t: int, xy_label_map, xt_angles, xt_label_maps,
                             yt_angles, yt_label_maps) -> MotionSignature:
    labels = getattr(xy_label_map, "labels", xy_label_map)
    xt, yt = frame_lookup(t, xt_angles, yt_angles, xt_label_maps, yt_label_maps)
    inside = labels == region.id
    return MotionSignature(float(xt[inside].mean()), float(yt[inside].mean()))


def _sig(s) -> tuple[float, float]:
    if isinstance(s, MotionSignature):
        return s.h_phi, s.v_phi
    return float(s[0]), float(s[1])


def passes_noise_floor(sig, params: GroupingParams) -> bool:
    h, v = _sig(sig)
    moving_h = abs(h - 90.0) > params.sigma_xt
    moving_v = abs(v - 90.0) > params.sigma_yt
    return (moving_h or moving_v) if params.noise_mode == "or" else (moving_h and moving_v)


def check_conditions(seed_sig, cand_sig, prospective_size: int, max_prev_size: int | None,
                     params: GroupingParams) -> tuple[bool, str | None]:
    """Accept a candidate region or name the first failed test:
    ``"a"`` motion similarity to the seed, ``"b"`` noise floor, ``"c"`` size growth."""
    # The similarity test is read as a distance between seed and candidate
    # signatures; taken literally (candidate magnitude only, no seed term)
    # it would reject even static regions at tau=44.
    if params.tau is not None:
        sh, sv = _sig(seed_sig)
        ch, cv = _sig(cand_sig)
        if not math.hypot(sh - ch, sv - cv) < params.tau:
            return False, "a"
    if not passes_noise_floor(cand_sig, params):
        return False, "b"
    if max_prev_size is not None and not prospective_size < params.eta * max_prev_size:
        return False, "c"
    return True, None


def grow_object(foa: int, t: int, adjacency: Sequence, signatures, sizes,
                max_prev_size: int | None, params: GroupingParams,
                labels: np.ndarray | None = None, exclude=()) -> ObjectSelection:
    """Breadth-first growth from the FOA region.

    Every candidate is compared against the FOA's own signature, and each
    region is tested at most once. Accepted regions expand the frontier.
    A seed below the noise floor yields a single-region object. Regions in
    ``exclude`` (already part of an earlier object) are never candidates.
    """
    seed_sig = signatures[foa]
    members = [foa]
    size = int(sizes[foa])
    if passes_noise_floor(seed_sig, params):
        visited = {foa, *exclude}
        queue = deque()
        for nb in sorted(adjacency[foa]):
            if nb not in visited:
                visited.add(nb)
                queue.append(nb)
        while queue:
            cand = queue.popleft()
            ok, _ = check_conditions(seed_sig, signatures[cand], size + int(sizes[cand]),
                                     max_prev_size, params)
            if not ok:
                continue
            members.append(cand)
            size += int(sizes[cand])
            for nb in sorted(adjacency[cand]):
                if nb not in visited:
                    visited.add(nb)
                    queue.append(nb)
    mask = bbox = None
    if labels is not None:
        mask = np.isin(labels, members)
        ys, xs = np.nonzero(mask)
        bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
    return ObjectSelection(t, foa, frozenset(members), size, mask, bbox)


def apply_ior(frame_saliency: FrameSaliency, selection: ObjectSelection) -> FrameSaliency:
    """Inhibit every member of the selected object for the rest of the frame."""
    return suppress(frame_saliency, selection.members)


@dataclass(frozen=True)
class FrameContext:
    """Everything grouping needs for one X-Y frame."""

    saliency: FrameSaliency
    adjacency: Sequence
    signatures: np.ndarray
    sizes: np.ndarray
    labels: np.ndarray | None = None

    @property
    def t(self) -> int:
        return self.saliency.t


def select_objects(ctx: FrameContext, params: GroupingParams,
                   max_prev_sizes: Sequence[int | None] | None = None) -> list[ObjectSelection]:
    """Up to ``params.cycles`` rounds of FOA selection, growth and IOR."""
    fs = ctx.saliency
    out = []
    for cycle in range(params.cycles):
        try:
            foa = select_foa(fs)
        except NoFocusError:
            break
        prev = max_prev_sizes[cycle] if max_prev_sizes is not None else None
        sel = grow_object(foa, fs.t, ctx.adjacency, ctx.signatures, ctx.sizes, prev, params,
                          labels=ctx.labels, exclude=np.flatnonzero(fs.suppressed).tolist())
        out.append(sel)
        fs = apply_ior(fs, sel)
    return out


def group_volume(contexts: Sequence[FrameContext], params: GroupingParams) -> list[list[ObjectSelection]]:
    """Run ``select_objects`` on the frames of one volume in order.

    The size guard compares against the largest selection made at the same
    cycle index on earlier frames of the volume; the first frame is unguarded.
    """
    max_sizes: list[int | None] = [None] * params.cycles
    result = []
    for ctx in contexts:
        sels = select_objects(ctx, params, max_sizes)
        for c, sel in enumerate(sels):
            max_sizes[c] = sel.size if max_sizes[c] is None else max(max_sizes[c], sel.size)
        result.append(sels)
    return result
