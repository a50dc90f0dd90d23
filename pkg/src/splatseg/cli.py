"""Command-line pipeline: label, render-mask, refine, eval, bench, robust, synth.

Machine-readable JSON goes to stdout, a short human summary to stderr.
Exit codes: 0 success, 2 file/format problems, 3 contract/config problems.

Configuration: ``--config FILE`` loads a JSON object with optional
``raster``, ``aggregation`` and ``refine`` sections; ``--set section.key=value``
overrides individual fields. Unknown sections or keys are rejected.
Thread count comes from ``--threads`` or the SPLATSEG_THREADS environment
variable (results never depend on it).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigError, ContractError, DataError, FormatError, SplatsegError
from .experiments import (
    bench_pipeline,
    report_json,
    robustness_experiment,
    stage_agreement_experiment,
    write_csv,
)
from .labeling import AggregationConfig, aggregate_labels
from .metrics import compute_metrics
from .rasterize import RasterConfig, rasterize, render_instance_mask, set_thread_count, warmup
from .refine import RefineConfig, refine_mask
from .synthetic import (
    SynthSpec,
    generate_gt_masks,
    generate_orbit,
    generate_scene,
    standard_spec,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONTRACT = 3

_CONFIG_SECTIONS = {
    "raster": RasterConfig,
    "aggregation": AggregationConfig,
    "refine": RefineConfig,
}


def _emit(doc: dict, summary: str) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    print(summary, file=sys.stderr)


def _parse_value(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


class Configs:
    """The three tunable config objects, built from defaults + overrides."""

    def __init__(self, raster: RasterConfig, aggregation: AggregationConfig, refine: RefineConfig):
        self.raster = raster
        self.aggregation = aggregation
        self.refine = refine

    @classmethod
    def from_args(cls, args) -> "Configs":
        sections: dict[str, dict] = {name: {} for name in _CONFIG_SECTIONS}
        if getattr(args, "config", None):
            with open(args.config) as fh:
                try:
                    doc = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"invalid config JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError("config file must be a JSON object")
            unknown = set(doc) - set(_CONFIG_SECTIONS)
            if unknown:
                raise ConfigError(f"unknown config sections: {sorted(unknown)}")
            for name, values in doc.items():
                if not isinstance(values, dict):
                    raise ConfigError(f"config section {name!r} must be an object")
                sections[name].update(values)
        for item in getattr(args, "set", None) or []:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects section.key=value, got {item!r}")
            section, sep, field_name = key.partition(".")
            if not sep:
                raise ConfigError(f"--set key must be section.key, got {key!r}")
            if section not in _CONFIG_SECTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            sections[section][field_name] = _parse_value(value)
        if getattr(args, "mode", None):
            sections["aggregation"]["mode"] = args.mode

        built = {}
        for name, cfg_cls in _CONFIG_SECTIONS.items():
            known = {f.name for f in dataclasses.fields(cfg_cls)}
            unknown = set(sections[name]) - known
            if unknown:
                raise ConfigError(
                    f"unknown {name} config keys: {sorted(unknown)}"
                )
            built[name] = cfg_cls(**sections[name])
        return cls(built["raster"], built["aggregation"], built["refine"])


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with raster/aggregation/refine sections")
    parser.add_argument(
        "--set",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="override one config field (repeatable)",
    )
    parser.add_argument("--threads", type=int, default=None, help="compositor thread count")
    parser.add_argument("-v", "--verbose", action="store_true")


def _apply_threads(args) -> None:
    n = args.threads
    if n is None:
        env = os.environ.get("SPLATSEG_THREADS")
        n = int(env) if env else None
    if n is not None:
        if n < 1:
            raise ConfigError("thread count must be at least 1")
        set_thread_count(n)


def _load_inputs(scene_path, cameras_path, masks_dir):
    scene = io.load_scene(scene_path)
    views = io.load_cameras(cameras_path)
    paths = io.find_mask_files(masks_dir, views.ids)
    masks = [io.load_mask(p) for p in paths]
    return scene, views, masks


def cmd_label(args) -> int:
    configs = Configs.from_args(args)
    scene, views, masks = _load_inputs(args.scene, args.cameras, args.masks_dir)
    t0 = time.perf_counter()
    assignment = aggregate_labels(scene, views, masks, configs.aggregation, configs.raster)
    ms = (time.perf_counter() - t0) * 1e3
    io.save_labels(assignment, scene, args.out)
    if args.labels_text:
        io.save_labels_text(assignment, args.labels_text)
    votes = int(np.count_nonzero(assignment.labels))
    _emit(
        {
            "N": scene.count,
            "K": assignment.num_instances,
            "votes": votes,
            "ms": ms,
        },
        f"labeled {scene.count} primitives with {assignment.num_instances} instances "
        f"({configs.aggregation.mode} mode, {len(views)} views, {ms:.1f} ms) -> {args.out}",
    )
    return EXIT_OK


def cmd_render_mask(args) -> int:
    configs = Configs.from_args(args)
    scene = io.load_scene(args.scene)
    assignment = io.load_labels(args.scene)
    views = io.load_cameras(args.cameras)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for view_id, camera in views:
        t0 = time.perf_counter()
        coarse = render_instance_mask(scene, assignment, camera, configs.raster)
        row = {"view": view_id, "render_ms": (time.perf_counter() - t0) * 1e3}
        io.save_mask(coarse, out_dir / f"mask_{view_id}.pgm")
        if args.refine:
            t0 = time.perf_counter()
            refined = refine_mask(coarse, config=configs.refine)
            row["refine_ms"] = (time.perf_counter() - t0) * 1e3
            io.save_mask(refined, out_dir / f"mask_{view_id}_refined.pgm")
        if args.stats:
            row["stats"] = rasterize(scene, camera, configs.raster).stats.to_dict()
        rows.append(row)
    _emit(
        report_json("render-mask", None, str(args.scene), rows),
        f"rendered {len(views)} masks -> {out_dir}",
    )
    return EXIT_OK


def cmd_refine(args) -> int:
    configs = Configs.from_args(args)
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = sorted(in_dir.glob("mask_*.pgm")) + sorted(in_dir.glob("mask_*.png"))
    if not paths:
        raise FormatError(f"no mask_*.pgm or mask_*.png files in {in_dir}")
    rows = []
    for path in paths:
        mask = io.load_mask(path)
        t0 = time.perf_counter()
        refined = refine_mask(mask, config=configs.refine)
        ms = (time.perf_counter() - t0) * 1e3
        io.save_mask(refined, out_dir / path.name)
        rows.append({"file": path.name, "ms": ms})
    _emit(
        report_json("refine", None, str(in_dir), rows),
        f"refined {len(paths)} masks -> {out_dir}",
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    pred_dir = Path(args.pred_dir)
    gt_dir = Path(args.gt_dir)
    names = sorted(
        p.name for p in list(gt_dir.glob("mask_*.pgm")) + list(gt_dir.glob("mask_*.png"))
    )
    if not names:
        raise FormatError(f"no mask_*.pgm or mask_*.png files in {gt_dir}")
    rows = []
    matching = "hungarian" if args.hungarian else "id"
    for name in names:
        pred_path = pred_dir / name
        if not pred_path.exists():
            raise FormatError(f"mask file not found: {pred_path}")
        metrics = compute_metrics(io.load_mask(pred_path), io.load_mask(gt_dir / name), matching)
        rows.append({"file": name, **metrics.to_dict()})
    scored = [r for r in rows if not r["empty_gt"]]
    mean_miou = float(np.mean([r["miou"] for r in scored])) if scored else 0.0
    mean_macc = float(np.mean([r["macc"] for r in rows]))
    doc = report_json(
        "eval",
        None,
        str(pred_dir),
        rows,
        mean_miou=mean_miou,
        mean_macc=mean_macc,
        matching=matching,
    )
    if args.csv:
        write_csv(args.csv, rows)
    _emit(doc, f"eval over {len(rows)} masks: mIoU {mean_miou:.4f}, mAcc {mean_macc:.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    configs = Configs.from_args(args)
    scene, views, masks = _load_inputs(args.scene, args.cameras, args.masks_dir)
    warmup(configs.raster)
    report = bench_pipeline(
        scene,
        views,
        masks,
        configs.aggregation,
        configs.raster,
        configs.refine,
        reps=args.reps,
    )
    doc = report_json("bench", None, str(args.scene), report.to_rows(), **{
        k: v for k, v in report.to_dict().items() if k != "rows"
    })
    _emit(
        doc,
        "bench: aggregation {:.1f} ms, render {:.2f} ms/frame, refine {:.2f} ms/frame "
        "(medians, {} reps)".format(
            report.aggregation.median_ms,
            report.render.median_ms,
            report.refine.median_ms,
            report.repetitions,
        ),
    )
    return EXIT_OK


def cmd_robust(args) -> int:
    configs = Configs.from_args(args)
    scene, views, masks = _load_inputs(args.scene, args.cameras, args.masks_dir)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError as exc:
        raise ConfigError(f"--sizes must be comma-separated integers: {exc}") from exc
    if not sizes:
        raise ConfigError("--sizes must name at least one subset size")
    warmup(configs.raster)
    rows = robustness_experiment(
        scene,
        views,
        masks,
        sizes,
        args.seed,
        configs.aggregation,
        configs.raster,
        reps=args.reps,
    )
    row_dicts = [r.to_dict() for r in rows]
    if args.csv:
        write_csv(args.csv, row_dicts)
    doc = report_json("robust", args.seed, str(args.scene), row_dicts)
    summary = ", ".join(
        f"{r.subset_size} views: agreement {r.agreement:.3f} @ {r.median_ms:.0f} ms"
        for r in rows
    )
    _emit(doc, f"robustness: {summary}")
    return EXIT_OK


def cmd_stage_agreement(args) -> int:
    configs = Configs.from_args(args)
    scene, views, masks = _load_inputs(args.scene, args.cameras, args.masks_dir)
    report = stage_agreement_experiment(
        scene, views, masks, configs.aggregation, configs.raster, configs.refine
    )
    doc = report_json(
        "stage-agreement",
        None,
        str(args.scene),
        report.to_rows(),
        macc=report.macc,
        miou=report.miou,
        empty=report.empty,
    )
    _emit(doc, f"stage agreement: mAcc {report.macc:.4f}, mIoU {report.miou:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.spec == "standard":
        spec = standard_spec()
    else:
        with open(args.spec) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid spec JSON: {exc}") from exc
        spec = SynthSpec.from_dict(doc)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scene, gt = generate_scene(spec)
    views = generate_orbit(spec)
    masks = generate_gt_masks(scene, gt, views)
    io.save_labels(gt, scene, out_dir / "scene.ply")
    io.save_cameras(views, out_dir / "cameras.json")
    masks_dir = out_dir / "masks"
    masks_dir.mkdir(exist_ok=True)
    for view_id, mask in zip(views.ids, masks):
        io.save_mask(mask, masks_dir / f"mask_{view_id}.pgm")
    _emit(
        {
            "N": scene.count,
            "K": gt.num_instances,
            "views": len(views),
            "resolution": list(spec.resolution),
            "seed": spec.seed,
            "out": str(out_dir),
        },
        f"synthesized {scene.count} primitives, {gt.num_instances} instances, "
        f"{len(views)} views -> {out_dir}",
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatseg",
        description="Lift 2D instance masks onto a 3D Gaussian scene and render them back.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="aggregate per-view masks into per-Gaussian labels")
    p.add_argument("scene")
    p.add_argument("cameras")
    p.add_argument("masks_dir")
    p.add_argument("out")
    p.add_argument("--mode", choices=["render", "centroid"], default=None)
    p.add_argument("--labels-text", help="also write a one-ID-per-line sidecar")
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("render-mask", help="render instance masks from a labeled scene")
    p.add_argument("scene")
    p.add_argument("cameras")
    p.add_argument("out_dir")
    p.add_argument("--refine", action="store_true", help="also write refined masks")
    p.add_argument("--stats", action="store_true", help="include render stats per view")
    _add_common(p)
    p.set_defaults(func=cmd_render_mask)

    p = sub.add_parser("refine", help="refine existing mask files")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--hungarian", action="store_true", help="ID-agnostic matching")
    p.add_argument("--csv", help="also write per-file rows as CSV")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time aggregation, rendering, refinement")
    p.add_argument("scene")
    p.add_argument("cameras")
    p.add_argument("masks_dir")
    p.add_argument("--reps", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("robust", help="agreement/time curve over view subsets")
    p.add_argument("scene")
    p.add_argument("cameras")
    p.add_argument("masks_dir")
    p.add_argument("--sizes", required=True, help="comma-separated subset sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--csv", help="also write the curve as CSV")
    _add_common(p)
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser(
        "stage-agreement", help="score re-rendered masks against the input masks"
    )
    p.add_argument("scene")
    p.add_argument("cameras")
    p.add_argument("masks_dir")
    _add_common(p)
    p.set_defaults(func=cmd_stage_agreement)

    p = sub.add_parser("synth", help="generate a synthetic scene, orbit, and GT masks")
    p.add_argument("--spec", default="standard", help="SynthSpec JSON path or 'standard'")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_threads(args)
        return args.func(args)
    except (FormatError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ContractError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except SplatsegError as exc:  # any future subclass defaults to contract
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
