"""End-to-end processing: segmentation of the three slice stacks, angles,
slice saliency, projection to frames, FOA selection and grouping.

Each stage can be cached to disk so the ``segment``, ``saliency`` and
``select`` subcommands can run separately and reproduce ``run`` exactly.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import evaluation
from .grouping import FrameContext, GroupingParams, ObjectSelection, frame_signatures, group_volume
from .motion_feature import angles_for_stack
from .saliency import FrameSaliency, SaliencyParams, pad_values, project_to_frame, render_saliency_map, stack_saliency
from .segmentation import Segmentation, SegmentationParams, render_labels, segment_stack
from .volume import DEFAULT_PATTERN, DEFAULT_VOLUME_SIZE, FrameVolume, extract_slices, load_frames, split_volumes, write_image

log = logging.getLogger(__name__)

SEG_CACHE = "vol_{:04d}.seg.npz"
SAL_CACHE = "vol_{:04d}.sal.npz"
MASK_NAME = "sel_f{:04d}_c{:d}.png"
SALIENCY_NAME = "sal_f{:04d}.png"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    input_dir: str | None = None
    pattern: str = DEFAULT_PATTERN
    start: int = 0
    count: int | None = None
    volume_size: int = DEFAULT_VOLUME_SIZE
    output_dir: str | None = None
    gt_dir: str | None = None
    # segmentation
    seed_threshold: float = 40.0
    border_threshold: float = 25.0
    min_region_size: int = 8
    # saliency
    weight_mode: str = "linear"
    normalize_by_region_count: bool = False
    # grouping
    tau: float | None = 44.0
    sigma_xt: float = 10.0
    sigma_yt: float = 10.0
    eta: float = 1.5
    noise_mode: str = "or"
    cycles: int = 1
    # evaluation / output
    levels: int = evaluation.DEFAULT_LEVELS
    emit_saliency: str | None = None  # directory for per-frame saliency PNGs
    emit_saliency_json: bool = False
    emit_labels: bool = False
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.volume_size < 2:
            raise ConfigError("volume_size must be >= 2")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.levels < 2:
            raise ConfigError("levels must be >= 2")
        try:
            self.segmentation_params()
            self.saliency_params()
            self.grouping_params()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def segmentation_params(self) -> SegmentationParams:
        return SegmentationParams(self.seed_threshold, self.border_threshold, self.min_region_size)

    def saliency_params(self) -> SaliencyParams:
        return SaliencyParams(self.weight_mode, self.normalize_by_region_count)

    def grouping_params(self) -> GroupingParams:
        return GroupingParams(self.tau, self.sigma_xt, self.sigma_yt, self.eta,
                              self.noise_mode, self.cycles)

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        """Flat YAML ``key: value`` file; ``overrides`` win."""
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a flat key/value mapping")
        data.update(overrides)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- stages


@dataclass
class VolumeSegmentation:
    volume: FrameVolume
    xy: list[Segmentation]
    xt: list[Segmentation]
    yt: list[Segmentation]

    def label_stack(self, axis: str) -> np.ndarray:
        return np.stack([s.labels for s in getattr(self, axis.lower())])

    def save(self, path) -> None:
        np.savez_compressed(path, data=self.volume.data, start=self.volume.start_index,
                            xy=self.label_stack("XY"), xt=self.label_stack("XT"),
                            yt=self.label_stack("YT"))

    @classmethod
    def load(cls, path) -> "VolumeSegmentation":
        with np.load(path) as z:
            volume = FrameVolume(z["data"], int(z["start"]))
            xy, xt, yt = z["xy"], z["xt"], z["yt"]
        stacks = {a: extract_slices(volume, a).slices for a in ("XY", "XT", "YT")}
        return cls(volume,
                   [Segmentation.from_labels(l, im) for l, im in zip(xy, stacks["XY"])],
                   [Segmentation.from_labels(l, im) for l, im in zip(xt, stacks["XT"])],
                   [Segmentation.from_labels(l, im) for l, im in zip(yt, stacks["YT"])])


@dataclass
class VolumeSaliency:
    start_index: int
    xt_angles: list[np.ndarray]
    yt_angles: list[np.ndarray]
    xt_saliency: list[np.ndarray]
    yt_saliency: list[np.ndarray]
    frames: list[FrameSaliency]

    def save(self, path) -> None:
        np.savez_compressed(
            path, start=self.start_index,
            xt_angles=pad_values(self.xt_angles, np.nan), yt_angles=pad_values(self.yt_angles, np.nan),
            xt_saliency=pad_values(self.xt_saliency, np.nan),
            yt_saliency=pad_values(self.yt_saliency, np.nan),
            frames=pad_values([f.values for f in self.frames], np.nan))

    @classmethod
    def load(cls, path) -> "VolumeSaliency":
        def unpad(table):
            return [row[~np.isnan(row)] for row in table]

        with np.load(path) as z:
            start = int(z["start"])
            frames = [FrameSaliency(start + t, v) for t, v in enumerate(unpad(z["frames"]))]
            return cls(start, unpad(z["xt_angles"]), unpad(z["yt_angles"]),
                       unpad(z["xt_saliency"]), unpad(z["yt_saliency"]), frames)


def segment_volume(volume: FrameVolume, params: SegmentationParams, threads: int = 1) -> VolumeSegmentation:
    out = {}
    for axis in ("XY", "XT", "YT"):
        slices = extract_slices(volume, axis).slices
        out[axis] = segment_stack(slices, params, threads)
    return VolumeSegmentation(volume, out["XY"], out["XT"], out["YT"])


def volume_saliency(vseg: VolumeSegmentation, params: SaliencyParams) -> VolumeSaliency:
    xt_phi = angles_for_stack(vseg.xt)
    yt_phi = angles_for_stack(vseg.yt)
    xt_ms = stack_saliency(vseg.xt, xt_phi, params)
    yt_ms = stack_saliency(vseg.yt, yt_phi, params)
    xt_lab, yt_lab = vseg.label_stack("XT"), vseg.label_stack("YT")
    xt_tab, yt_tab = pad_values(xt_ms), pad_values(yt_ms)
    start = vseg.volume.start_index
    frames = [project_to_frame(t, seg, xt_tab, yt_tab, xt_lab, yt_lab, frame_index=start + t)
              for t, seg in enumerate(vseg.xy)]
    return VolumeSaliency(start, xt_phi, yt_phi, xt_ms, yt_ms, frames)


def frame_contexts(vseg: VolumeSegmentation, vsal: VolumeSaliency) -> list[FrameContext]:
    xt_lab, yt_lab = vseg.label_stack("XT"), vseg.label_stack("YT")
    xt_tab, yt_tab = pad_values(vsal.xt_angles), pad_values(vsal.yt_angles)
    contexts = []
    for t, seg in enumerate(vseg.xy):
        n = len(seg.regions)
        sigs = frame_signatures(t, seg.labels, n, xt_tab, yt_tab, xt_lab, yt_lab)
        contexts.append(FrameContext(
            saliency=vsal.frames[t],
            adjacency=[r.neighbors for r in seg.regions],
            signatures=sigs,
            sizes=np.array([r.size for r in seg.regions]),
            labels=seg.labels,
        ))
    return contexts


def select_volume(vseg: VolumeSegmentation, vsal: VolumeSaliency,
                  params: GroupingParams) -> list[list[ObjectSelection]]:
    return group_volume(frame_contexts(vseg, vsal), params)


# ---------------------------------------------------------------- runner


@dataclass
class RunReport:
    records: list[dict] = field(default_factory=list)
    volumes: list[dict] = field(default_factory=list)
    metrics: dict | None = None
    timing: dict = field(default_factory=dict)

    def to_json(self) -> str:
        # timing is kept out so reports are bit-identical across runs
        doc = {"volumes": self.volumes, "records": self.records}
        if self.metrics is not None:
            doc["metrics"] = self.metrics
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


class _Timer:
    def __init__(self, sink: dict, key: str):
        self.sink, self.key = sink, key

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.sink[self.key] = self.sink.get(self.key, 0.0) + time.perf_counter() - self.t0


def load_volumes(config: PipelineConfig) -> list[FrameVolume]:
    frames = load_frames(config.input_dir, config.pattern, config.start, config.count)
    if not frames:
        raise evaluation.FrameError(f"no frames matching {config.pattern!r} in {config.input_dir}")
    return split_volumes(frames, config.volume_size)


def _cache_dir(config: PipelineConfig) -> Path:
    return Path(config.output_dir) / "cache"


def stage_segment(config: PipelineConfig, volumes: list[FrameVolume] | None = None,
                  timing: dict | None = None) -> list[VolumeSegmentation]:
    timing = {} if timing is None else timing
    with _Timer(timing, "load"):
        volumes = load_volumes(config) if volumes is None else volumes
    params = config.segmentation_params()
    out = []
    for k, vol in enumerate(volumes):
        with _Timer(timing, "segment"):
            vseg = segment_volume(vol, params, config.threads)
        log.info("volume %d (frames %d..%d): %d/%d/%d XY/XT/YT slices segmented", k,
                 vol.start_index, vol.start_index + vol.T - 1, len(vseg.xy), len(vseg.xt), len(vseg.yt))
        out.append(vseg)
    if config.output_dir is not None:
        cache = _cache_dir(config)
        cache.mkdir(parents=True, exist_ok=True)
        for k, vseg in enumerate(out):
            vseg.save(cache / SEG_CACHE.format(k))
        if config.emit_labels:
            ldir = Path(config.output_dir) / "labels"
            ldir.mkdir(exist_ok=True)
            for vseg in out:
                for t, seg in enumerate(vseg.xy):
                    write_image(ldir / f"labels_f{vseg.volume.start_index + t:04d}.png",
                                render_labels(seg.label_map, config.seed))
    return out


def _load_cached(config: PipelineConfig, name: str, loader) -> list:
    cache = _cache_dir(config)
    paths = []
    k = 0
    while (cache / name.format(k)).exists():
        paths.append(cache / name.format(k))
        k += 1
    if not paths:
        raise evaluation.FrameError(f"no cached stage output {name.format(0)} in {cache}")
    return [loader(p) for p in paths]


def stage_saliency(config: PipelineConfig, vsegs: list[VolumeSegmentation] | None = None,
                   timing: dict | None = None) -> list[VolumeSaliency]:
    timing = {} if timing is None else timing
    if vsegs is None:
        vsegs = _load_cached(config, SEG_CACHE, VolumeSegmentation.load)
    params = config.saliency_params()
    with _Timer(timing, "saliency"):
        out = [volume_saliency(v, params) for v in vsegs]
    if config.output_dir is not None:
        cache = _cache_dir(config)
        cache.mkdir(parents=True, exist_ok=True)
        for k, vsal in enumerate(out):
            vsal.save(cache / SAL_CACHE.format(k))
        root = Path(config.output_dir)
        if config.emit_saliency:
            sdir = Path(config.emit_saliency)
            sdir.mkdir(parents=True, exist_ok=True)
            for vseg, vsal in zip(vsegs, out):
                for seg, fs in zip(vseg.xy, vsal.frames):
                    write_image(sdir / SALIENCY_NAME.format(fs.t), render_saliency_map(fs, seg.label_map))
        if config.emit_saliency_json:
            doc = {str(fs.t): {str(i): float(v) for i, v in enumerate(fs.values)}
                   for vsal in out for fs in vsal.frames}
            (root / "saliency.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return out


def stage_select(config: PipelineConfig, vsegs: list[VolumeSegmentation] | None = None,
                 vsals: list[VolumeSaliency] | None = None, timing: dict | None = None) -> RunReport:
    timing = {} if timing is None else timing
    if vsegs is None:
        vsegs = _load_cached(config, SEG_CACHE, VolumeSegmentation.load)
    if vsals is None:
        vsals = _load_cached(config, SAL_CACHE, VolumeSaliency.load)
    if len(vsegs) != len(vsals):
        raise evaluation.FrameError("segmentation and saliency caches cover different volumes")
    params = config.grouping_params()
    truths = evaluation.load_ground_truth(config.gt_dir, config.pattern) if config.gt_dir else None

    report = RunReport(timing=timing)
    frame_metrics = []
    out_dir = Path(config.output_dir) if config.output_dir is not None else None
    for k, (vseg, vsal) in enumerate(zip(vsegs, vsals)):
        with _Timer(timing, "select"):
            per_frame = select_volume(vseg, vsal, params)
        report.volumes.append({"volume": k, "first_frame": vseg.volume.start_index,
                               "frames": vseg.volume.T})
        for fs, sels in zip(vsal.frames, per_frame):
            union = np.zeros((vseg.volume.height, vseg.volume.width), dtype=bool)
            for c, sel in enumerate(sels):
                rec = sel.to_record()
                rec.update(volume=k, cycle=c, foa=sel.seed_region)
                report.records.append(rec)
                union |= sel.mask
                if out_dir is not None:
                    write_image(out_dir / MASK_NAME.format(fs.t, c), sel.mask.astype(np.uint8) * 255)
            if truths is not None:
                if fs.t not in truths:
                    raise evaluation.FrameError(f"no ground truth for frame {fs.t}")
                m = evaluation.selection_metrics(union, truths[fs.t])
                frame_metrics.append({"frame": fs.t, "tp_rate": m.tp_rate, "fp_rate": m.fp_rate,
                                      "empty_gt": m.empty_gt})
    if truths is not None:
        agg = evaluation.aggregate_metrics(
            [evaluation.SelectionMetrics(m["tp_rate"], m["fp_rate"], m["empty_gt"]) for m in frame_metrics])
        report.metrics = {"frames": frame_metrics,
                          "aggregate": {"tp_rate": agg.tp_rate, "fp_rate": agg.fp_rate}}
    if out_dir is not None:
        (out_dir / "report.json").write_text(report.to_json())
        (out_dir / "timing.json").write_text(json.dumps(timing, indent=1, sort_keys=True) + "\n")
    return report


def run_pipeline(config: PipelineConfig, volumes: list[FrameVolume] | None = None) -> RunReport:
    """All stages in one pass. Inputs are read and validated before any
    output is written."""
    timing: dict = {}
    if volumes is None:
        with _Timer(timing, "load"):
            volumes = load_volumes(config)
    if config.gt_dir is not None:
        evaluation.load_ground_truth(config.gt_dir, config.pattern)
    vsegs = stage_segment(config, volumes, timing)
    vsals = stage_saliency(config, vsegs, timing)
    return stage_select(config, vsegs, vsals, timing)
