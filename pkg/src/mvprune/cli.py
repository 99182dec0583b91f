"""
Command-line harness.

    mvprune run --input clip.y4m --pattern tzs --threshold 4 --out results/
    mvprune compare --input clip.y4m --threshold-a unbounded --threshold-b 4
    mvprune surface --radius 64 --contours 4,10,20
    mvprune heatmap --input clip.y4m --heatmap-radius 16
    mvprune synth --kind translation --frames 6 --out clip.y4m

Exit status: 0 on success, 2 for configuration errors, 3 for I/O errors.
"""

import argparse
import os
import sys

import numpy as np

from mvprune import __version__
from mvprune.analytics import (
    RdCurve,
    bd_rate,
    complexity_reduction,
    rate_heatmap_correlation,
    write_grid_csv,
    write_pgm,
)
from mvprune.frame_io import FrameFormatError, write_raw_yuv, write_y4m
from mvprune.harness import (
    ConfigError,
    ExperimentConfig,
    parse_kv,
    rd_bd_rate,
    run_experiment,
    load_inputs,
)
from mvprune.rate_model import UNBOUNDED, admitted_region, format_threshold, rate_surface
from mvprune import report
from mvprune.synth import CLIP_KINDS, make_clip

EXIT_CONFIG = 2
EXIT_IO = 3

# flag dest -> config key
_RUN_FLAGS = {
    "input": "inputs",
    "raw_width": "raw_width",
    "raw_height": "raw_height",
    "pattern": "pattern",
    "threshold": "threshold",
    "qp": "qps",
    "block_sizes": "block_sizes",
    "range": "search_range",
    "frames": "frames",
    "out": "out",
    "margin": "margin",
    "raster_step": "raster_step",
    "raster_trigger": "raster_trigger_distance",
    "refinement_rounds": "max_refinement_rounds",
    "diamond_stop_rounds": "diamond_stop_rounds",
    "start_candidates": "start_candidates",
    "heatmap_radius": "heatmap_radius",
    "classes": "classes",
}


def _add_run_flags(p, suffix=""):
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--input", action="append",
                   help="Y4M (or raw 4:2:0 with --raw-width/--raw-height); repeatable")
    p.add_argument("--raw-width", type=int)
    p.add_argument("--raw-height", type=int)
    p.add_argument("--pattern", help="full, tzs or octagonal")
    p.add_argument("--threshold", help="rate threshold in bits, or 'unbounded'")
    p.add_argument("--qp", help="comma-separated QP list")
    p.add_argument("--block-sizes", help="comma-separated sizes, e.g. 16x16,8x8")
    p.add_argument("--range", type=int, help="search range (window half-width)")
    p.add_argument("--frames", type=int, help="read at most this many frames")
    p.add_argument("--out", help="output directory")
    p.add_argument("--margin", type=int, help="pels a candidate may reach past the frame")
    p.add_argument("--raster-step", type=int)
    p.add_argument("--raster-trigger", type=int)
    p.add_argument("--refinement-rounds", type=int)
    p.add_argument("--diamond-stop-rounds", type=int)
    p.add_argument("--start-candidates", help="subset of zero,left,above,above_right")
    p.add_argument("--heatmap-radius", type=int)
    p.add_argument("--classes", help="comma-separated class label per input")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")


def _read_config_file(path):
    try:
        with open(path) as fh:
            return parse_kv(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def build_config(args, config_path=None, overrides=None) -> ExperimentConfig:
    """Config file values first, then command-line flags (flags win)."""
    values = {}
    path = config_path if config_path is not None else getattr(args, "config", None)
    if path:
        values.update(_read_config_file(path))
    for dest, key in _RUN_FLAGS.items():
        v = getattr(args, dest, None)
        if v is None:
            continue
        if dest == "input":
            v = ",".join(v)
        values[key] = v if isinstance(v, str) else str(v)
    values.update(overrides or {})
    return ExperimentConfig.from_mapping(values)


def _per_size(summary):
    return {f"{w}x{h}": n for (w, h), n in sorted(summary.stats.candidates.items())}


def cmd_run(args):
    cfg = build_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    main, base = run_experiment(cfg, threads=args.threads)
    rows = report.run_rows(main, base)
    report.write_csv(os.path.join(cfg.out, "report.csv"), report.RUN_COLUMNS, rows)
    report.write_csv(os.path.join(cfg.out, "blocks.csv"), report.BLOCK_COLUMNS,
                     report.block_rows(main))
    for row, s in zip(rows, main):
        row["candidates_per_size"] = _per_size(s)
    report.write_json(os.path.join(cfg.out, "report.json"), {
        "command": "run",
        "config": cfg.to_mapping(),
        "rows": rows,
        "notes": report.REPORT_NOTES,
    })
    with open(os.path.join(cfg.out, "effective.cfg"), "w") as fh:
        fh.write(cfg.to_kv())
    if not args.no_figures:
        from mvprune.plotting import plot_complexity

        labels = [f"{r['sequence']} qp{r['qp']}" for r in rows]
        plot_complexity(labels, [r["delta_c_percent"] or 0.0 for r in rows],
                        os.path.join(cfg.out, "complexity.png"))
    report.write_sidecar(cfg.out, "run", args.threads)
    for r in rows:
        print(f"{r['sequence']} qp={r['qp']} t={r['threshold']} "
              f"C={r['complexity']} dC={report.fmt(r['delta_c_percent'])}%")
    return 0


def _same_inputs(a: ExperimentConfig, b: ExperimentConfig):
    key = lambda c: (tuple(os.path.abspath(p) for p in c.inputs), c.raw_width,
                     c.raw_height, c.frames)
    return key(a) == key(b)


COMPARE_COLUMNS = [
    "sequence", "class", "qp", "complexity_a", "complexity_b", "delta_c_percent",
    "total_cost_a", "total_cost_b", "cost_delta_percent",
]
CLASS_COLUMNS = ["class", "sequences", "delta_c_percent", "cost_delta_percent",
                 "bd_rate_proxy_percent"]


def compare_runs(runs_a, runs_b):
    """Per sequence x QP rows plus per-class averages of the deltas."""
    index_b = {(s.sequence, s.qp): s for s in runs_b}
    rows = []
    for a in runs_a:
        b = index_b[(a.sequence, a.qp)]
        ca, cb = a.complexity, b.complexity
        rows.append({
            "sequence": a.sequence,
            "class": a.seq_class,
            "qp": a.qp,
            "complexity_a": ca,
            "complexity_b": cb,
            "delta_c_percent": complexity_reduction(ca, cb) if ca else None,
            "total_cost_a": a.total_cost,
            "total_cost_b": b.total_cost,
            "cost_delta_percent": ((b.total_cost - a.total_cost) / a.total_cost * 100.0
                                   if a.total_cost else None),
        })
    per_seq = {}
    for a in runs_a:
        per_seq.setdefault((a.seq_class, a.sequence), []).append(a)
    classes = {}
    for (cls, seq), ra in per_seq.items():
        rb = [index_b[(seq, s.qp)] for s in ra]
        seq_rows = [r for r in rows if r["sequence"] == seq]
        bd = rd_bd_rate(ra, rb) if len(ra) >= 4 else None
        entry = classes.setdefault(cls, {"dc": [], "cost": [], "bd": [], "n": 0})
        entry["n"] += 1
        entry["dc"] += [r["delta_c_percent"] for r in seq_rows if r["delta_c_percent"] is not None]
        entry["cost"] += [r["cost_delta_percent"] for r in seq_rows
                          if r["cost_delta_percent"] is not None]
        if bd is not None:
            entry["bd"].append(bd)
    mean = lambda xs: sum(xs) / len(xs) if xs else None
    class_rows = [
        {"class": cls, "sequences": e["n"], "delta_c_percent": mean(e["dc"]),
         "cost_delta_percent": mean(e["cost"]), "bd_rate_proxy_percent": mean(e["bd"])}
        for cls, e in sorted(classes.items())
    ]
    return rows, class_rows


def cmd_compare(args):
    over_a = {k: v for k, v in (("threshold", args.threshold_a),
                                ("pattern", args.pattern_a)) if v is not None}
    over_b = {k: v for k, v in (("threshold", args.threshold_b),
                                ("pattern", args.pattern_b)) if v is not None}
    cfg_a = build_config(args, args.config_a, dict(over_a, baseline="false"))
    cfg_b = build_config(args, args.config_b, dict(over_b, baseline="false"))
    if not _same_inputs(cfg_a, cfg_b):
        raise ConfigError("configurations A and B must use identical inputs")
    out = args.out or cfg_a.out
    os.makedirs(out, exist_ok=True)
    inputs = load_inputs(cfg_a)
    runs_a, _ = run_experiment(cfg_a, threads=args.threads, inputs=inputs)
    runs_b, _ = run_experiment(cfg_b, threads=args.threads, inputs=inputs)
    rows, class_rows = compare_runs(runs_a, runs_b)
    report.write_csv(os.path.join(out, "compare.csv"), COMPARE_COLUMNS, rows)
    report.write_csv(os.path.join(out, "compare_classes.csv"), CLASS_COLUMNS, class_rows)
    report.write_json(os.path.join(out, "compare.json"), {
        "command": "compare",
        "config_a": cfg_a.to_mapping(),
        "config_b": cfg_b.to_mapping(),
        "rows": rows,
        "classes": class_rows,
        "notes": report.REPORT_NOTES,
    })
    report.write_sidecar(out, "compare", args.threads)
    for r in class_rows:
        print(f"class {r['class']}: dC={report.fmt(r['delta_c_percent'])}% "
              f"BD-rate(proxy)={report.fmt(r['bd_rate_proxy_percent'])}%")
    return 0


def _parse_contours(text):
    if text is None or not text.strip():
        return []
    try:
        values = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise ConfigError(f"contours must be integers, got {text!r}") from None
    if any(v < 0 for v in values):
        raise ConfigError("contours must be non-negative")
    return values


def cmd_surface(args):
    if args.radius < 0:
        raise ConfigError("radius must be >= 0")
    contours = _parse_contours(args.contours)
    os.makedirs(args.out, exist_ok=True)
    surface = rate_surface(args.radius)
    with open(os.path.join(args.out, "surface.csv"), "w") as fh:
        write_grid_csv(surface, fh)
    with open(os.path.join(args.out, "surface.pgm"), "wb") as fh:
        write_pgm(surface, fh, comment=f"mvd rate surface, radius {args.radius}")
    masks = {}
    for t in contours:
        mask = admitted_region(args.radius, t).astype(np.int64)
        masks[str(t)] = int(mask.sum())
        with open(os.path.join(args.out, f"mask_t{t}.csv"), "w") as fh:
            write_grid_csv(mask, fh)
        with open(os.path.join(args.out, f"mask_t{t}.pgm"), "wb") as fh:
            write_pgm(mask, fh, comment=f"rate <= {t}, radius {args.radius}")
    report.write_json(os.path.join(args.out, "surface.json"), {
        "radius": args.radius,
        "contours": contours,
        "admitted_cells": masks,
        "min": int(surface.min()),
        "max": int(surface.max()),
    })
    if not args.no_figures:
        from mvprune.plotting import plot_rate_surface

        plot_rate_surface(surface, contours, os.path.join(args.out, "surface.png"))
    for t, n in masks.items():
        print(f"t={t}: {n} admitted cells")
    return 0


def cmd_heatmap(args):
    cfg = build_config(args, overrides={"baseline": "false"})
    os.makedirs(cfg.out, exist_ok=True)
    main, _ = run_experiment(cfg, threads=args.threads)
    heat = main[0].heatmap
    for s in main[1:]:
        heat = heat.merge(s.heatmap)
    surface = rate_surface(heat.radius)
    try:
        r = rate_heatmap_correlation(heat, surface)
    except ValueError:
        r = None
    with open(os.path.join(cfg.out, "heatmap.csv"), "w") as fh:
        write_grid_csv(heat.counts, fh)
    with open(os.path.join(cfg.out, "heatmap.pgm"), "wb") as fh:
        write_pgm(np.log1p(heat.counts), fh,
                  comment=f"ln(1 + decisions), radius {heat.radius}")
    report.write_json(os.path.join(cfg.out, "heatmap.json"), {
        "command": "heatmap",
        "config": cfg.to_mapping(),
        "radius": heat.radius,
        "decisions": heat.decisions,
        "overflow": heat.overflow,
        "pearson": r,
        "zero_policy": "log1p",
        "notes": report.REPORT_NOTES,
    })
    if not args.no_figures:
        from mvprune.plotting import plot_heatmap

        plot_heatmap(heat.counts, os.path.join(cfg.out, "heatmap.png"),
                     title=f"pattern={cfg.pattern} t={format_threshold(cfg.threshold)}")
    report.write_sidecar(cfg.out, "heatmap", args.threads)
    print(f"decisions={heat.decisions} pearson={report.fmt(r)}")
    return 0


def cmd_synth(args):
    frames = make_clip(args.kind, args.width, args.height, args.frames, args.seed,
                       max_shift=args.max_shift)
    parent = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(parent, exist_ok=True)
    with open(args.out, "wb") as fh:
        if args.out.endswith(".y4m"):
            write_y4m(frames, fh)
        else:
            write_raw_yuv(frames, fh)
    print(f"wrote {len(frames)} {args.width}x{args.height} frames to {args.out}")
    return 0


def _read_rd_csv(path):
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        try:
            return RdCurve([(float(r["bitrate"]), float(r["psnr"])) for r in reader])
        except (KeyError, TypeError):
            raise ConfigError(f"{path}: expected 'bitrate' and 'psnr' columns") from None


def cmd_bdrate(args):
    value = bd_rate(_read_rd_csv(args.anchor), _read_rd_csv(args.test), args.method)
    print(f"{value:.4f}")
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="mvprune",
        description="Integer motion estimation with rate-based candidate elimination.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write reports")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare two configurations on the same inputs")
    _add_run_flags(p)
    p.add_argument("--config-a")
    p.add_argument("--config-b")
    p.add_argument("--threshold-a")
    p.add_argument("--threshold-b")
    p.add_argument("--pattern-a")
    p.add_argument("--pattern-b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("surface", help="write the MVD rate surface and contour masks")
    p.add_argument("--radius", type=int, default=64)
    p.add_argument("--contours", default="4,10,20")
    p.add_argument("--out", default="surface")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("heatmap", help="MV decision heatmap and rate correlation")
    _add_run_flags(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("synth", help="generate a synthetic clip")
    p.add_argument("--kind", choices=CLIP_KINDS, default="translation")
    p.add_argument("--width", type=int, default=352)
    p.add_argument("--height", type=int, default=288)
    p.add_argument("--frames", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-shift", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bdrate", help="BD-rate between two bitrate,psnr CSV files")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--method", choices=("cubic", "pchip"), default="cubic")
    p.set_defaults(func=cmd_bdrate)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except FrameFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
