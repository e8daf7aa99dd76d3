"""Deterministic synthetic scenes with exact ground truth.

Velocities are in image coordinates: positive ``vx`` moves right and
positive ``vy`` moves down. Scene specs round-trip through JSON:

    {
      "width": 320, "height": 240, "frame_count": 10,
      "background": {"kind": "tiles", "colors": [[0, 0, 0], [0, 0, 255]],
                     "tile": 40, "velocity": [0, 0]},
      "objects": [{"x": 200, "y": 100, "w": 40, "h": 30, "vx": -3, "vy": 0,
                   "color": [255, 0, 0], "second_color": [255, 255, 0],
                   "split": "vertical"}],
      "rng_seed": 0, "noise_amplitude": 0
    }

Background kinds: ``solid`` (first color), ``tiles`` (checkerboard of two
colors) and ``scroll`` (the checkerboard translated by ``velocity`` each
frame).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import GroundTruth
from .volume import DEFAULT_PATTERN, Frame, write_image

# Pairwise RGB distance >= 255, well above three times the default seed threshold.
PALETTE = {
    "black": (0, 0, 0),
    "white": (255, 255, 255),
    "red": (255, 0, 0),
    "green": (0, 255, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
}


class SceneError(ValueError):
    pass


@dataclass
class Background:
    kind: str = "solid"
    colors: list = field(default_factory=lambda: [PALETTE["black"], PALETTE["blue"]])
    tile: int = 40
    velocity: tuple = (0, 0)


@dataclass
class SceneObject:
    x: int
    y: int
    w: int
    h: int
    vx: int = 0
    vy: int = 0
    color: tuple = PALETTE["red"]
    second_color: tuple | None = None
    split: str = "vertical"

    def box(self, t: int) -> tuple[int, int, int, int]:
        """(left, top, right_exclusive, bottom_exclusive) at frame t."""
        x0 = self.x + t * self.vx
        y0 = self.y + t * self.vy
        return x0, y0, x0 + self.w, y0 + self.h


@dataclass
class SceneSpec:
    width: int = 320
    height: int = 240
    frame_count: int = 10
    background: Background = field(default_factory=Background)
    objects: list = field(default_factory=list)
    rng_seed: int = 0
    noise_amplitude: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        bg = Background(**d.pop("background", {}))
        objs = [SceneObject(**o) for o in d.pop("objects", [])]
        return cls(background=bg, objects=objs, **d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path) -> "SceneSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _validate(spec: SceneSpec) -> None:
    if spec.width <= 0 or spec.height <= 0 or spec.frame_count < 0:
        raise SceneError("scene dimensions must be positive")
    if not 0 <= spec.noise_amplitude <= 255:
        raise SceneError("noise_amplitude must be within 0..255")
    if spec.background.kind not in ("solid", "tiles", "scroll"):
        raise SceneError(f"unknown background kind {spec.background.kind!r}")
    for i, obj in enumerate(spec.objects):
        for v in (obj.vx, obj.vy, obj.x, obj.y, obj.w, obj.h):
            if int(v) != v:
                raise SceneError(f"object {i}: positions and velocities must be integers")
        if obj.w <= 0 or obj.h <= 0:
            raise SceneError(f"object {i}: empty box")
        for t in range(spec.frame_count):
            x0, y0, x1, y1 = obj.box(t)
            if x0 < 0 or y0 < 0 or x1 > spec.width or y1 > spec.height:
                raise SceneError(f"object {i} leaves the frame at t={t}: box {(x0, y0, x1, y1)}")


def _background(spec: SceneSpec, t: int) -> np.ndarray:
    bg = spec.background
    colors = np.array(bg.colors, dtype=np.uint8)
    if bg.kind == "solid":
        return np.broadcast_to(colors[0], (spec.height, spec.width, 3)).copy()
    vx, vy = bg.velocity if bg.kind == "scroll" else (0, 0)
    xs = np.arange(spec.width) - vx * t
    ys = np.arange(spec.height) - vy * t
    parity = (ys[:, None] // bg.tile + xs[None, :] // bg.tile) % 2
    return colors[parity]


def render_frame(spec: SceneSpec, t: int) -> tuple[np.ndarray, np.ndarray]:
    img = _background(spec, t)
    gt = np.zeros((spec.height, spec.width), dtype=bool)
    for obj in spec.objects:
        x0, y0, x1, y1 = obj.box(t)
        img[y0:y1, x0:x1] = obj.color
        if obj.second_color is not None:
            if obj.split == "vertical":
                img[y0:y1, x0 + obj.w // 2:x1] = obj.second_color
            else:
                img[y0 + obj.h // 2:y1, x0:x1] = obj.second_color
        gt[y0:y1, x0:x1] = True
    return img, gt


def generate_scene(spec: SceneSpec) -> tuple[list[Frame], list[GroundTruth]]:
    _validate(spec)
    rng = np.random.default_rng(spec.rng_seed)
    frames, truths = [], []
    for t in range(spec.frame_count):
        img, gt = render_frame(spec, t)
        if spec.noise_amplitude:
            a = spec.noise_amplitude
            noise = rng.integers(-a, a + 1, size=img.shape)
            img = np.clip(img.astype(np.int16) + noise, 0, 255).astype(np.uint8)
        frames.append(Frame(t, img))
        truths.append(GroundTruth(t, gt))
    return frames, truths


def write_scene(spec: SceneSpec, out_dir, pattern: str = DEFAULT_PATTERN) -> None:
    frames, truths = generate_scene(spec)
    out = Path(out_dir)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    for f, g in zip(frames, truths):
        write_image(out / (pattern % f.index), f.pixels)
        write_image(out / "gt" / (pattern % g.frame), g.mask.astype(np.uint8) * 255)


def expected_angle(velocity: float, h: float = 9) -> float:
    """Angle traced on a spatiotemporal slice by an edge moving at
    ``velocity`` px/frame over ``h`` rows (negative velocity = leftward/upward)."""
    if h < 1:
        raise ValueError("h must be >= 1")
    if velocity == 0:
        return 90.0
    return math.degrees(math.atan2(h, -velocity * h))
