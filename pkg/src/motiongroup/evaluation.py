"""ROC-style evaluation of saliency maps and object selections against
manually marked ground truth."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .volume import FrameError, indexed_files, read_gray

DEFAULT_LEVELS = 256


@dataclass(frozen=True)
class GroundTruth:
    frame: int
    mask: np.ndarray  # bool, True on the object


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tp_rate: float
    fp_rate: float


@dataclass(frozen=True)
class SelectionMetrics:
    tp_rate: float
    fp_rate: float
    empty_gt: bool = False


def _gt_mask(gt) -> np.ndarray:
    return np.asarray(gt.mask if isinstance(gt, GroundTruth) else gt, dtype=bool)


def _check_shape(a: np.ndarray, gt: np.ndarray) -> None:
    if a.shape != gt.shape:
        raise ValueError(f"map shape {a.shape} does not match ground truth {gt.shape}")


def threshold_ladder(levels: int = DEFAULT_LEVELS, max_value: float = 255.0) -> np.ndarray:
    if levels < 2:
        raise ValueError("levels must be >= 2")
    return np.linspace(0.0, float(max_value), levels)


def sweep_rates(saliency_map: np.ndarray, gt, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """TP and FP rates of ``{map > theta}`` for every theta."""
    mask = _gt_mask(gt)
    values = np.asarray(saliency_map)
    _check_shape(values, mask)
    pos = np.sort(values[mask].ravel())
    neg = np.sort(values[~mask].ravel())
    tp_count = len(pos) - np.searchsorted(pos, thresholds, side="right")
    fp_count = len(neg) - np.searchsorted(neg, thresholds, side="right")
    tp = tp_count / len(pos) if len(pos) else np.ones(len(thresholds))
    fp = fp_count / len(neg) if len(neg) else np.zeros(len(thresholds))
    return tp.astype(np.float64), fp.astype(np.float64)


def threshold_sweep(saliency_map: np.ndarray, gt, levels: int = DEFAULT_LEVELS,
                    max_value: float | None = None) -> list[RocPoint]:
    """ROC points for an increasing threshold ladder from 0 to ``max_value``
    (255 for 8-bit maps, otherwise the map maximum)."""
    values = np.asarray(saliency_map)
    if max_value is None:
        max_value = 255.0 if values.dtype == np.uint8 else float(values.max())
    thresholds = threshold_ladder(levels, max_value)
    tp, fp = sweep_rates(values, gt, thresholds)
    return [RocPoint(float(th), float(a), float(b)) for th, a, b in zip(thresholds, tp, fp)]


def sequence_curve(maps: Mapping[int, np.ndarray], truths: Mapping[int, GroundTruth],
                   levels: int = DEFAULT_LEVELS, max_value: float = 255.0):
    """Per-threshold mean of the per-frame rates over all frames."""
    missing = sorted(set(maps) ^ set(truths))
    if missing:
        raise FrameError(f"frame sets differ; unmatched frames: {missing}")
    thresholds = threshold_ladder(levels, max_value)
    tps, fps = [], []
    for idx in sorted(maps):
        tp, fp = sweep_rates(maps[idx], truths[idx], thresholds)
        tps.append(tp)
        fps.append(fp)
    return thresholds, np.mean(tps, axis=0), np.mean(fps, axis=0)


def selection_metrics(mask: np.ndarray, gt) -> SelectionMetrics:
    g = _gt_mask(gt)
    m = np.asarray(mask, dtype=bool)
    _check_shape(m, g)
    n_pos = int(g.sum())
    n_neg = g.size - n_pos
    tp = float((m & g).sum() / n_pos) if n_pos else 1.0
    fp = float((m & ~g).sum() / n_neg) if n_neg else 0.0
    return SelectionMetrics(tp, fp, empty_gt=n_pos == 0)


def aggregate_metrics(per_frame: Sequence[SelectionMetrics]) -> SelectionMetrics:
    if not per_frame:
        raise ValueError("no frames to aggregate")
    return SelectionMetrics(
        float(np.mean([m.tp_rate for m in per_frame])),
        float(np.mean([m.fp_rate for m in per_frame])),
        empty_gt=any(m.empty_gt for m in per_frame),
    )


def load_external_saliency(directory, pattern: str = "frame_%04d.png",
                           shape: tuple[int, int] | None = None) -> dict[int, np.ndarray]:
    """Grayscale saliency maps produced by another model, keyed by frame index."""
    files = indexed_files(directory, pattern)
    if not files:
        raise FrameError(f"no saliency maps matching {pattern!r} in {directory}")
    maps = {}
    for idx, path in files.items():
        m = read_gray(path)
        if shape is not None and m.shape != tuple(shape):
            raise FrameError(f"saliency map {path} is {m.shape}, expected {tuple(shape)}")
        maps[idx] = m
    return maps


def load_ground_truth(directory, pattern: str = "frame_%04d.png") -> dict[int, GroundTruth]:
    files = indexed_files(directory, pattern)
    if not files:
        raise FrameError(f"no ground truth masks matching {pattern!r} in {directory}")
    return {idx: GroundTruth(idx, read_gray(p) > 127) for idx, p in files.items()}


def write_curves_csv(path, curves: Mapping[str, tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "threshold", "tp_rate", "fp_rate"])
        for name, (th, tp, fp) in curves.items():
            for a, b, c in zip(th, tp, fp):
                w.writerow([name, f"{a:.6g}", f"{b:.6f}", f"{c:.6f}"])


def write_summary_json(path, points: Mapping[str, SelectionMetrics], extra: dict | None = None) -> None:
    doc = {"operating_points": {k: {"tp_rate": v.tp_rate, "fp_rate": v.fp_rate,
                                    "empty_gt_frames": v.empty_gt}
                                for k, v in points.items()}}
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def plot_roc_svg(path, curves: Mapping[str, tuple], points: Mapping[str, SelectionMetrics]) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for name, (_, tp, fp) in curves.items():
        ax.plot(fp, tp, label=name)
    for name, m in points.items():
        ax.scatter([m.fp_rate], [m.tp_rate], marker="o", label=name, zorder=3)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
