"""Frame sequences, X-Y-T pixel volumes and their slice stacks."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image

AXES = ("XY", "XT", "YT")
DEFAULT_PATTERN = "frame_%04d.png"
DEFAULT_VOLUME_SIZE = 10


class FrameError(ValueError):
    """Raised when frames cannot be read or do not fit together."""


@dataclass(frozen=True)
class Frame:
    index: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] == 0 or px.shape[1] == 0:
            raise FrameError(f"frame {self.index}: expected non-empty HxWx3 image, got {px.shape}")
        if px.dtype != np.uint8:
            raise FrameError(f"frame {self.index}: expected uint8 pixels, got {px.dtype}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class FrameVolume:
    """T stacked frames. ``data`` is indexed ``[t, y, x, channel]``."""

    data: np.ndarray
    start_index: int = 0

    def __post_init__(self):
        if self.data.ndim != 4 or self.data.shape[3] != 3:
            raise FrameError(f"volume must be (T, H, W, 3), got {self.data.shape}")
        if self.data.shape[0] < 2:
            raise FrameError("a volume needs at least 2 frames")

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def frame_indices(self) -> list[int]:
        return list(range(self.start_index, self.start_index + self.T))

    @property
    def frames(self) -> list[Frame]:
        return [Frame(i, self.data[t]) for t, i in enumerate(self.frame_indices)]


@dataclass(frozen=True)
class SliceStack:
    """Ordered 2-D slices of one volume along one axis.

    ``slices`` is ``(n_slices, slice_height, slice_width, 3)``. For the
    spatiotemporal axes the slice rows are time: XT slice ``y`` holds
    ``volume[t, y, x]`` at ``(row=t, col=x)`` and YT slice ``x`` holds
    ``volume[t, y, x]`` at ``(row=t, col=y)``.
    """

    axis: str
    slices: np.ndarray

    @property
    def slice_width(self) -> int:
        return self.slices.shape[2]

    @property
    def slice_height(self) -> int:
        return self.slices.shape[1]

    def __len__(self) -> int:
        return self.slices.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.slices)

    def __getitem__(self, i) -> np.ndarray:
        return self.slices[i]


def read_image(path: Path | str) -> np.ndarray:
    """Decode a PNG or binary PPM into an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def read_gray(path: Path | str) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


def write_image(path: Path | str, array: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(array)).save(path)


def load_frames(directory, pattern: str = DEFAULT_PATTERN, start: int = 0,
                count: int | None = None) -> list[Frame]:
    """Load ``count`` numbered frames starting at ``start``.

    With ``count=None`` frames are read until the first missing index.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameError(f"input directory does not exist: {directory}")
    frames: list[Frame] = []
    index = start
    while count is None or index < start + count:
        path = directory / (pattern % index)
        if not path.exists():
            if count is None:
                break
            raise FrameError(f"missing frame {index}: {path}")
        pixels = read_image(path)
        if frames and pixels.shape != frames[0].pixels.shape:
            h0, w0 = frames[0].pixels.shape[:2]
            h, w = pixels.shape[:2]
            raise FrameError(
                f"frame {index} is {w}x{h} but frame {frames[0].index} is {w0}x{h0}")
        frames.append(Frame(index, pixels))
        index += 1
    return frames


def build_volume(frames: Sequence[Frame]) -> FrameVolume:
    if len(frames) < 2:
        raise FrameError(f"need at least 2 frames to build a volume, got {len(frames)}")
    shape = frames[0].pixels.shape
    for f in frames[1:]:
        if f.pixels.shape != shape:
            raise FrameError(
                f"frame {f.index} has shape {f.pixels.shape}, expected {shape}")
    data = np.stack([f.pixels for f in frames])
    return FrameVolume(data, start_index=frames[0].index)


def split_volumes(frames: Sequence[Frame], T: int = DEFAULT_VOLUME_SIZE) -> list[FrameVolume]:
    """Window a sequence into consecutive non-overlapping volumes of T frames.

    A trailing window is kept only if it holds at least 2 frames.
    """
    if T < 2:
        raise FrameError(f"volume size must be >= 2, got {T}")
    volumes = []
    for lo in range(0, len(frames), T):
        chunk = frames[lo:lo + T]
        if len(chunk) >= 2:
            volumes.append(build_volume(chunk))
    return volumes


def extract_slices(volume: FrameVolume, axis: str) -> SliceStack:
    d = volume.data
    if axis == "XY":
        slices = d
    elif axis == "XT":
        slices = d.transpose(1, 0, 2, 3)  # (H, T, W, 3)
    elif axis == "YT":
        slices = d.transpose(2, 0, 1, 3)  # (W, T, H, 3)
    else:
        raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")
    return SliceStack(axis, np.ascontiguousarray(slices))


def pattern_regex(pattern: str) -> re.Pattern:
    """Turn a printf-style pattern such as ``frame_%04d.png`` into a regex
    capturing the index."""
    m = re.search(r"%0?\d*d", pattern)
    if m is None:
        raise ValueError(f"pattern {pattern!r} has no integer field")
    head, tail = pattern[:m.start()], pattern[m.end():]
    return re.compile("^" + re.escape(head) + r"(\d+)" + re.escape(tail) + "$")


def indexed_files(directory, pattern: str) -> dict[int, Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameError(f"directory does not exist: {directory}")
    rx = pattern_regex(pattern)
    out = {}
    for p in sorted(directory.iterdir()):
        m = rx.match(p.name)
        if m:
            out[int(m.group(1))] = p
    return dict(sorted(out.items()))
