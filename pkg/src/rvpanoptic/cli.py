"""Command-line interface.

Subcommands: ``project``, ``normals``, ``segment``, ``eval``, ``bench``,
``synth``. Every configuration key doubles as a flag (``--projection.height
64``) overriding the config file, which overrides the defaults. Exit codes:
0 success, 2 configuration error, 3 format error, 4 consistency error,
1 any other pipeline error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import backend, bench, kitti_io, metrics
from .config import SCHEMA, PipelineConfig, load_config, load_scene
from .depth import SOURCE_COL, SOURCE_MEASURED, SOURCE_ROW, SOURCE_UPSAMPLED
from .errors import ConfigError, ConsistencyError, FormatError, IoError, PipelineError
from .fusion import PanopticLabeling
from .pipeline import PipelineInputs, run_pipeline
from .synthetic import calibrated_scene, generate_scene

# road-scene average pillar count at the default 0.15 m grid, for eyeballing
REFERENCE_PILLARS_AT_DEFAULT_GRID = 141


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="FILE", help="config file path")
    parent.add_argument("--backend", choices=list(backend.BACKENDS),
                        help="kernel backend override")
    for key, (_, default, help_text) in SCHEMA.items():
        parent.add_argument(f"--{key}", dest=key, metavar="V",
                            help=f"{help_text} (default {default})")
    return parent


def _build_config(args) -> PipelineConfig:
    overrides = {key: getattr(args, key) for key in SCHEMA
                 if getattr(args, key, None) is not None}
    if args.backend:
        backend.set_backend(args.backend)
    return load_config(args.config, overrides)


def _resolve_inputs(args) -> PipelineInputs:
    return PipelineInputs(scan=args.scan, labels=getattr(args, "labels", None),
                          semantic_map=getattr(args, "semantic_map", None),
                          embedding_map=getattr(args, "embedding_map", None))


def _cmd_project(args) -> int:
    cfg = _build_config(args)
    cloud = kitti_io.read_scan_bin(args.scan)
    from .projection import build_dense_depth_map, project_to_range_view

    ri = project_to_range_view(cloud, cfg.projection)
    half = build_dense_depth_map(cloud, cfg.projection)
    print(f"points={len(cloud)} grid={ri.shape[0]}x{ri.shape[1]} "
          f"occupied={ri.occupied_fraction:.4f} "
          f"half_occupied={half.occupied_fraction:.4f}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        kitti_io.write_map_f32(out / "depth.bin", ri.depth)
        kitti_io.write_map_f32(out / "xyz.bin", ri.xyz)
        print(f"wrote {out / 'depth.bin'} and {out / 'xyz.bin'}")
    return 0


def _cmd_normals(args) -> int:
    cfg = _build_config(args)
    cloud = kitti_io.read_scan_bin(args.scan)
    from .depth import build_depth_maps, compute_normals
    from .projection import project_to_range_view

    ri = project_to_range_view(cloud, cfg.projection)
    maps = build_depth_maps(cloud, ri, cfg.completion)
    normals = compute_normals(maps.completed, cfg.projection)
    counts = {name: int(np.count_nonzero(maps.fill_source == code))
              for name, code in (("measured", SOURCE_MEASURED), ("row", SOURCE_ROW),
                                 ("col", SOURCE_COL), ("coarse", SOURCE_UPSAMPLED))}
    print(" ".join(f"{k}={v}" for k, v in counts.items())
          + f" valid_normals={int(normals.valid.sum())}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        kitti_io.write_map_f32(out / "completed.bin", maps.completed)
        kitti_io.write_map_f32(out / "normals.bin", normals.normals)
        print(f"wrote {out / 'completed.bin'} and {out / 'normals.bin'}")
    return 0


def _cmd_segment(args) -> int:
    cfg = _build_config(args)
    result = run_pipeline(cfg, _resolve_inputs(args))
    kitti_io.write_panoptic(args.out, result.labeling)
    instances = int(np.unique(result.labeling.instance[result.labeling.instance > 0]).size)
    print(f"wrote {args.out}: points={len(result.labeling)} "
          f"instances={instances} pillars={result.graph.count}")
    if args.timings:
        for name, us in result.timings_us.items():
            print(f"  {name}: {us} us")
    return 0


def _label_pairs(pred, gt) -> list[tuple[Path, Path]]:
    pred, gt = Path(pred), Path(gt)
    if pred.is_dir() != gt.is_dir():
        raise ConsistencyError("pred and gt must both be files or both directories")
    if not pred.is_dir():
        return [(pred, gt)]
    pairs = []
    for pred_file in sorted(pred.glob("*.label")):
        gt_file = gt / pred_file.name
        if not gt_file.exists():
            raise ConsistencyError(f"missing ground truth for {pred_file.name}")
        pairs.append((pred_file, gt_file))
    if not pairs:
        raise ConsistencyError(f"no .label files under {pred}")
    return pairs


def _cmd_eval(args) -> int:
    cfg = _build_config(args)
    merged: metrics.SegmentMatches | None = None
    for pred_path, gt_path in _label_pairs(args.pred, args.gt):
        pred = PanopticLabeling(*kitti_io.read_labels(pred_path),
                                thing_classes=cfg.thing_classes)
        gt_sem, gt_inst = kitti_io.read_labels(gt_path, expected_count=len(pred))
        gt = PanopticLabeling(gt_sem, gt_inst, thing_classes=cfg.thing_classes)
        matches = metrics.match_segments(pred, gt, cfg.min_points, cfg.ignore_class)
        if merged is None:
            merged = matches
        else:
            for cls, cm in matches.per_class.items():
                if cls in merged.per_class:
                    merged.per_class[cls].merge(cm)
                else:
                    merged.per_class[cls] = cm
    report = metrics.panoptic_quality(merged)
    print(metrics.format_report(report))
    if args.report:
        Path(args.report).write_text(metrics.report_key_values(report) + "\n")
        print(f"wrote {args.report}")
    return 0


def _bench_frames(args, cfg) -> list[PipelineInputs]:
    if args.scan:
        return [PipelineInputs(scan=args.scan, labels=args.labels,
                               semantic_map=args.semantic_map,
                               embedding_map=args.embedding_map)]
    frames = []
    for offset in range(args.frames):
        if args.scene and offset == 0:
            spec = load_scene(args.scene)
        else:
            spec = calibrated_scene(seed=args.seed + offset)
        cloud, _ = generate_scene(spec)
        frames.append(PipelineInputs(scan=cloud,
                                     labels=(cloud.semantic, cloud.instance)))
    return frames


def _cmd_bench(args) -> int:
    cfg = _build_config(args)
    frames = _bench_frames(args, cfg)
    reference = (REFERENCE_PILLARS_AT_DEFAULT_GRID
                 if abs(cfg.instance.grid_size - 0.15) < 1e-12 else None)
    if args.compare:
        reports = bench.compare_backends(cfg, frames, args.repetitions)
        print(bench.format_comparison(reports))
    else:
        report = bench.run_benchmark(cfg, frames, args.repetitions)
        print(bench.format_report(report, reference_pillars=reference))
    return 0


def _cmd_synth(args) -> int:
    if args.scene:
        spec = load_scene(args.scene)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        spec = calibrated_scene(seed=args.seed if args.seed is not None else 0)
    cloud, emap = generate_scene(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kitti_io.write_scan_bin(out / "scan.bin", cloud)
    kitti_io.write_panoptic(out / "scan.label",
                            PanopticLabeling(cloud.semantic, cloud.instance,
                                             thing_classes=spec.thing_classes))
    from .projection import project_to_range_view

    ri = project_to_range_view(cloud, spec.sensor)
    winner = np.where(ri.occupancy, ri.pixel_to_point, 0)
    sem_map = np.where(ri.occupancy, cloud.semantic[winner], 0)
    kitti_io.write_map_u16(out / "semantic_map.bin", sem_map)
    kitti_io.write_map_f32(out / "embedding_map.bin", emap.embedding)
    fg = int(emap.mask.sum())
    print(f"wrote scan.bin scan.label semantic_map.bin embedding_map.bin to {out}")
    print(f"points={len(cloud)} foreground_pixels={fg} "
          f"instances={len(spec.instances)} seed={spec.seed}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvpanoptic",
                                     description="range-view panoptic pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _config_parent()

    p = sub.add_parser("project", parents=[parent],
                       help="project a scan to the range view")
    p.add_argument("--scan", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("normals", parents=[parent],
                       help="complete depth and compute surface normals")
    p.add_argument("--scan", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_normals)

    p = sub.add_parser("segment", parents=[parent],
                       help="run the full pipeline and write panoptic labels")
    p.add_argument("--scan", required=True)
    p.add_argument("--labels")
    p.add_argument("--semantic-map", dest="semantic_map")
    p.add_argument("--embedding-map", dest="embedding_map")
    p.add_argument("--out", required=True)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("eval", parents=[parent],
                       help="panoptic-quality report for predictions vs GT")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", help="write key=value metrics to this file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", parents=[parent],
                       help="per-stage timing report")
    p.add_argument("--scan")
    p.add_argument("--labels")
    p.add_argument("--semantic-map", dest="semantic_map")
    p.add_argument("--embedding-map", dest="embedding_map")
    p.add_argument("--scene", help="synthetic scene file instead of a scan")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--compare", action="store_true",
                   help="benchmark both kernel backends")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("synth", parents=[parent],
                       help="generate a synthetic labeled scan")
    p.add_argument("--scene", help="scene description file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 3
    except ConsistencyError as exc:
        print(f"consistency error: {exc}", file=sys.stderr)
        return 4
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
