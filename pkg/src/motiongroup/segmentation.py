"""Slice-wise region-growing color segmentation.

Every slice of every stack is segmented independently into 4-connected
regions of similar color. A region starts at the first unlabeled pixel in
raster order and grows breadth-first; a candidate pixel joins when its RGB
distance to the seed pixel is within ``seed_threshold`` and its distance to
the adjacent region pixel it was reached from is within
``border_threshold``. Remnants smaller than ``min_region_size`` are merged
into the neighbor of closest mean color.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class SegmentationParams:
    seed_threshold: float = 40.0
    border_threshold: float = 25.0
    min_region_size: int = 8
    connectivity: int = 4

    def __post_init__(self):
        if self.seed_threshold < 0 or self.border_threshold < 0:
            raise ValueError("segmentation thresholds must be >= 0")
        if self.min_region_size < 1:
            raise ValueError("min_region_size must be >= 1")
        if self.connectivity != 4:
            raise ValueError("only 4-connectivity is supported")


@dataclass(frozen=True)
class Region:
    id: int
    size: int
    bbox: tuple[int, int, int, int]  # left, top, right, bottom (inclusive)
    centroid: tuple[float, float]  # (x, y)
    mean_color: tuple[float, float, float]
    neighbors: frozenset = field(default_factory=frozenset)

    @property
    def first_row(self) -> int:
        return self.bbox[1]

    @property
    def last_row(self) -> int:
        return self.bbox[3]


@dataclass(frozen=True)
class LabelMap:
    labels: np.ndarray  # (height, width) int32 region ids

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def get(self, x: int, y: int) -> int:
        return int(self.labels[y, x])


@dataclass(frozen=True)
class Segmentation:
    regions: list[Region]
    label_map: LabelMap

    @property
    def labels(self) -> np.ndarray:
        return self.label_map.labels

    def __len__(self) -> int:
        return len(self.regions)

    @classmethod
    def from_labels(cls, labels: np.ndarray, image: np.ndarray | None = None) -> "Segmentation":
        """Derive region records from a label map with ids ``0..n-1``."""
        labels = np.ascontiguousarray(labels, dtype=np.int32)
        n = int(labels.max()) + 1
        h, w = labels.shape
        flat = labels.ravel()
        sizes = np.bincount(flat, minlength=n)
        ys, xs = np.divmod(np.arange(h * w), w)
        cx = np.bincount(flat, weights=xs, minlength=n) / sizes
        cy = np.bincount(flat, weights=ys, minlength=n) / sizes
        if image is not None:
            px = image.reshape(-1, 3).astype(np.float64)
            means = np.stack([np.bincount(flat, weights=px[:, c], minlength=n)
                              for c in range(3)], axis=1) / sizes[:, None]
        else:
            means = np.zeros((n, 3))
        boxes = ndimage.find_objects(labels + 1)
        adjacency = compute_adjacency(labels, n)
        regions = []
        for i in range(n):
            sl_y, sl_x = boxes[i]
            regions.append(Region(
                id=i,
                size=int(sizes[i]),
                bbox=(sl_x.start, sl_y.start, sl_x.stop - 1, sl_y.stop - 1),
                centroid=(float(cx[i]), float(cy[i])),
                mean_color=tuple(float(v) for v in means[i]),
                neighbors=frozenset(adjacency[i]),
            ))
        return cls(regions, LabelMap(labels))


def adjacent_pairs(labels: np.ndarray) -> np.ndarray:
    """Unique (i, j) pairs with i < j of 4-adjacent distinct labels."""
    a = np.concatenate([labels[:, :-1].ravel(), labels[:-1, :].ravel()])
    b = np.concatenate([labels[:, 1:].ravel(), labels[1:, :].ravel()])
    keep = a != b
    a, b = a[keep].astype(np.int64), b[keep].astype(np.int64)
    if len(a) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    span = int(hi.max()) + 1
    keys = np.unique(lo * span + hi)
    return np.stack(np.divmod(keys, span), axis=1)


def compute_adjacency(labels, n: int | None = None) -> list[set[int]]:
    """Neighbor sets indexed by region id (4-adjacency, symmetric, irreflexive)."""
    if isinstance(labels, LabelMap):
        labels = labels.labels
    if n is None:
        n = int(labels.max()) + 1
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in adjacent_pairs(labels).tolist():
        adj[i].add(j)
        adj[j].add(i)
    return adj


@numba.njit(cache=True, nogil=True)
def _grow_regions(img, seed_t2, border_t2, labels):
    h, w = labels.shape
    for y in range(h):
        for x in range(w):
            labels[y, x] = -1
    queue = np.empty(h * w, np.int64)
    dy = (-1, 0, 0, 1)
    dx = (0, -1, 1, 0)
    n = 0
    for sy in range(h):
        for sx in range(w):
            if labels[sy, sx] >= 0:
                continue
            labels[sy, sx] = n
            s0 = img[sy, sx, 0]
            s1 = img[sy, sx, 1]
            s2 = img[sy, sx, 2]
            head = 0
            tail = 1
            queue[0] = sy * w + sx
            while head < tail:
                p = queue[head]
                head += 1
                py = p // w
                px = p - py * w
                for k in range(4):
                    qy = py + dy[k]
                    qx = px + dx[k]
                    if qy < 0 or qy >= h or qx < 0 or qx >= w:
                        continue
                    if labels[qy, qx] >= 0:
                        continue
                    c0 = img[qy, qx, 0]
                    c1 = img[qy, qx, 1]
                    c2 = img[qy, qx, 2]
                    ds = (c0 - s0) ** 2 + (c1 - s1) ** 2 + (c2 - s2) ** 2
                    if ds > seed_t2:
                        continue
                    db = ((c0 - img[py, px, 0]) ** 2 + (c1 - img[py, px, 1]) ** 2
                          + (c2 - img[py, px, 2]) ** 2)
                    if db > border_t2:
                        continue
                    labels[qy, qx] = n
                    queue[tail] = qy * w + qx
                    tail += 1
            n += 1
    return n


def _merge_small(labels: np.ndarray, n: int, image: np.ndarray, min_size: int) -> np.ndarray:
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=n).tolist()
    if min(sizes) >= min_size or n == 1:
        return labels
    px = image.reshape(-1, 3).astype(np.float64)
    csum = np.stack([np.bincount(flat, weights=px[:, c], minlength=n) for c in range(3)],
                    axis=1).tolist()
    adj = compute_adjacency(labels, n)
    target = list(range(n))

    def mean(i):
        s = sizes[i]
        c = csum[i]
        return c[0] / s, c[1] / s, c[2] / s

    changed = True
    while changed:
        changed = False
        for r in range(n):
            if target[r] != r or sizes[r] >= min_size or not adj[r]:
                continue
            r0, r1, r2 = mean(r)
            best_key = None
            for j in adj[r]:
                m0, m1, m2 = mean(j)
                key = ((m0 - r0) ** 2 + (m1 - r1) ** 2 + (m2 - r2) ** 2, j)
                if best_key is None or key < best_key:
                    best_key = key
            best = best_key[1]
            sizes[best] += sizes[r]
            cb, cr = csum[best], csum[r]
            csum[best] = [cb[0] + cr[0], cb[1] + cr[1], cb[2] + cr[2]]
            for k in adj[r]:
                adj[k].discard(r)
                if k != best:
                    adj[k].add(best)
                    adj[best].add(k)
            adj[r] = set()
            target[r] = best
            changed = True
    root = np.array(target)
    # follow merge chains to the surviving region
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            break
        root = nxt
    return root[labels]


def _relabel_raster(labels: np.ndarray) -> np.ndarray:
    """Renumber ids 0..n-1 in order of each region's first pixel in raster order."""
    uniq, first = np.unique(labels.ravel(), return_index=True)
    order = uniq[np.argsort(first)]
    lut = np.empty(int(uniq.max()) + 1, dtype=np.int32)
    lut[order] = np.arange(len(order), dtype=np.int32)
    return lut[labels]


def segment_labels(image: np.ndarray, params: SegmentationParams = SegmentationParams()) -> np.ndarray:
    """Label map only; the fast path used for whole stacks."""
    if image.ndim != 3 or image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError(f"expected non-empty HxWx3 image, got {image.shape}")
    img = np.ascontiguousarray(image, dtype=np.int32)
    labels = np.empty(image.shape[:2], dtype=np.int32)
    n = _grow_regions(img, float(params.seed_threshold) ** 2,
                      float(params.border_threshold) ** 2, labels)
    if params.min_region_size > 1:
        labels = _merge_small(labels, n, image, params.min_region_size)
    return _relabel_raster(labels)


def segment_slice(image: np.ndarray, params: SegmentationParams = SegmentationParams()) -> Segmentation:
    return Segmentation.from_labels(segment_labels(image, params), image)


def segment_stack(slices, params: SegmentationParams = SegmentationParams(),
                  threads: int = 1) -> list[Segmentation]:
    """Segment every slice of a stack; output order follows input order."""
    def work(img):
        return segment_slice(img, params)

    if threads <= 1:
        return [work(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, slices))


def render_labels(label_map, seed: int = 0) -> np.ndarray:
    """Label map as an RGB image with a fixed pseudo-random color per id."""
    labels = label_map.labels if isinstance(label_map, LabelMap) else label_map
    rng = np.random.default_rng(seed)
    palette = rng.integers(0, 256, size=(int(labels.max()) + 1, 3), dtype=np.uint8)
    return palette[labels]
