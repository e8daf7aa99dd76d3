"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__, evaluation
from .pipeline import (ConfigError, PipelineConfig, run_pipeline, stage_saliency,
                       stage_segment, stage_select)
from .synth import SceneError, SceneSpec, write_scene
from .volume import FrameError, read_gray

EXIT_USAGE = 1
EXIT_DATA = 2

log = logging.getLogger("motiongroup")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tau(value: str):
    if value.lower() in ("off", "none"):
        return "off"
    return float(value)


def _version_text() -> str:
    defaults = PipelineConfig().to_dict()
    lines = [f"motiongroup {__version__}", "defaults:"]
    lines += [f"  {k}: {v}" for k, v in defaults.items()]
    return "\n".join(lines)


class _VersionAction(argparse.Action):
    def __init__(self, option_strings, dest, **kw):
        super().__init__(option_strings, dest, nargs=0, help="print version and default parameters")

    def __call__(self, parser, namespace, values, option_string=None):
        print(_version_text())
        parser.exit(0)


def _add_pipeline_args(p: argparse.ArgumentParser, inputs: bool = True) -> None:
    p.add_argument("--config", help="flat YAML key/value file; flags override it")
    p.add_argument("--out", dest="output_dir", help="output / work directory")
    p.add_argument("--threads", type=int)
    if inputs:
        p.add_argument("--input-dir")
        p.add_argument("--pattern")
        p.add_argument("--start", type=int)
        p.add_argument("--count", type=int)
        p.add_argument("--volume-size", type=int, metavar="T")
        p.add_argument("--seed-threshold", type=float)
        p.add_argument("--border-threshold", type=float)
        p.add_argument("--min-region-size", type=int)
        p.add_argument("--emit-labels", action="store_true", default=None)
        p.add_argument("--seed", type=int, help="seed for debug label colors")


def _add_saliency_args(p):
    p.add_argument("--weight-mode", choices=("linear", "uniform", "proportional"))
    p.add_argument("--normalize", dest="normalize_by_region_count", action="store_true", default=None)
    p.add_argument("--emit-saliency", metavar="DIR")
    p.add_argument("--emit-saliency-json", action="store_true", default=None)


def _add_grouping_args(p):
    p.add_argument("--cycles", type=int)
    p.add_argument("--tau", type=_tau, help="similarity threshold in degrees, or 'off'")
    p.add_argument("--sigma", type=float, help="sets both noise floors")
    p.add_argument("--sigma-xt", type=float)
    p.add_argument("--sigma-yt", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--noise-mode", choices=("and", "or"))
    p.add_argument("--gt-dir", help="ground truth masks; adds metrics to the report")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="motiongroup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action=_VersionAction)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="render a synthetic scene with ground truth")
    p.add_argument("--spec", required=True, help="scene JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--pattern", default="frame_%04d.png")

    p = sub.add_parser("segment", help="segment all slice stacks into the work directory")
    _add_pipeline_args(p)

    p = sub.add_parser("saliency", help="angles, slice saliency and frame projection")
    _add_pipeline_args(p, inputs=False)
    _add_saliency_args(p)

    p = sub.add_parser("select", help="FOA selection and grouping")
    _add_pipeline_args(p, inputs=False)
    p.add_argument("--pattern", help="ground truth filename pattern")
    _add_grouping_args(p)

    p = sub.add_parser("run", help="full pipeline")
    _add_pipeline_args(p)
    _add_saliency_args(p)
    _add_grouping_args(p)

    p = sub.add_parser("evaluate", help="ROC curves and selection operating points")
    p.add_argument("--selections", required=True, help="directory with sel_f####_c#.png masks")
    p.add_argument("--gt", required=True, help="ground truth directory")
    p.add_argument("--gt-pattern", default="frame_%04d.png")
    p.add_argument("--saliency", action="append", default=[], metavar="NAME=DIR",
                   help="saliency maps to sweep; repeatable")
    p.add_argument("--saliency-pattern", default="frame_%04d.png")
    p.add_argument("--levels", type=int, default=evaluation.DEFAULT_LEVELS)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true", help="also write roc.svg")
    return parser


def config_from_args(args) -> PipelineConfig:
    names = {f.name for f in fields(PipelineConfig)}
    overrides = {k: v for k, v in vars(args).items() if k in names and v is not None}
    sigma = getattr(args, "sigma", None)
    if sigma is not None:
        overrides.setdefault("sigma_xt", sigma)
        overrides.setdefault("sigma_yt", sigma)
    if overrides.get("tau") == "off":
        overrides["tau"] = None
    if args.config:
        return PipelineConfig.from_file(args.config, **overrides)
    return PipelineConfig.from_dict(overrides)


def _require_input(config: PipelineConfig) -> None:
    if not config.input_dir:
        raise UsageError("--input-dir is required")
    if not Path(config.input_dir).is_dir():
        raise FrameError(f"input directory does not exist: {config.input_dir}")


def _require_out(config: PipelineConfig) -> None:
    if not config.output_dir:
        raise UsageError("--out is required")


def cmd_synth(args) -> None:
    spec = SceneSpec.load(args.spec)
    write_scene(spec, args.out, args.pattern)


def cmd_segment(args) -> None:
    config = config_from_args(args)
    _require_input(config)
    _require_out(config)
    stage_segment(config)


def cmd_saliency(args) -> None:
    config = config_from_args(args)
    _require_out(config)
    stage_saliency(config)


def cmd_select(args) -> None:
    config = config_from_args(args)
    _require_out(config)
    report = stage_select(config)
    if report.metrics:
        log.info("aggregate: %s", report.metrics["aggregate"])


def cmd_run(args) -> None:
    config = config_from_args(args)
    _require_input(config)
    _require_out(config)
    report = run_pipeline(config)
    if report.metrics:
        log.info("aggregate: %s", report.metrics["aggregate"])


def load_selection_masks(directory) -> dict[int, np.ndarray]:
    """Union of all cycle masks per frame."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameError(f"selections directory does not exist: {directory}")
    masks: dict[int, np.ndarray] = {}
    for p in sorted(directory.glob("sel_f*_c*.png")):
        frame = int(p.stem.split("_")[1][1:])
        m = read_gray(p) > 127
        masks[frame] = masks[frame] | m if frame in masks else m
    if not masks:
        raise FrameError(f"no selection masks in {directory}")
    return dict(sorted(masks.items()))


def evaluate_run(selections, gt_dir, saliency_dirs: dict[str, str], out_dir, levels: int = 256,
                 gt_pattern: str = "frame_%04d.png", saliency_pattern: str = "frame_%04d.png",
                 plot: bool = False) -> dict:
    truths = evaluation.load_ground_truth(gt_dir, gt_pattern)
    masks = load_selection_masks(selections)
    if set(masks) != set(truths):
        raise FrameError(f"selection frames {sorted(set(masks) ^ set(truths))} have no counterpart")
    per_frame = {i: evaluation.selection_metrics(masks[i], truths[i]) for i in sorted(masks)}
    points = {"selection": evaluation.aggregate_metrics(list(per_frame.values()))}
    curves = {}
    for name, d in saliency_dirs.items():
        maps = evaluation.load_external_saliency(d, saliency_pattern)
        if set(maps) != set(truths):
            raise FrameError(f"saliency maps '{name}' cover frames {sorted(maps)}, "
                             f"ground truth covers {sorted(truths)}")
        curves[name] = evaluation.sequence_curve(maps, truths, levels)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_curves_csv(out / "curves.csv", curves)
    extra = {"frames": {str(i): {"tp_rate": m.tp_rate, "fp_rate": m.fp_rate, "empty_gt": m.empty_gt}
                        for i, m in per_frame.items()}}
    evaluation.write_summary_json(out / "summary.json", points, extra)
    if plot:
        evaluation.plot_roc_svg(out / "roc.svg", curves, points)
    return {"points": points, "curves": curves}


def cmd_evaluate(args) -> None:
    dirs = {}
    for item in args.saliency:
        if "=" not in item:
            raise UsageError(f"--saliency expects NAME=DIR, got {item!r}")
        name, d = item.split("=", 1)
        dirs[name] = d
    res = evaluate_run(args.selections, args.gt, dirs, args.out, args.levels,
                       args.gt_pattern, args.saliency_pattern, args.plot)
    p = res["points"]["selection"]
    print(json.dumps({"tp_rate": p.tp_rate, "fp_rate": p.fp_rate}))


COMMANDS = {
    "synth": cmd_synth,
    "segment": cmd_segment,
    "saliency": cmd_saliency,
    "select": cmd_select,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except (UsageError, ConfigError) as e:
        print(f"motiongroup {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FrameError, SceneError, OSError, ValueError) as e:
        print(f"motiongroup {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
