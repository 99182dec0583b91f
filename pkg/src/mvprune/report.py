"""CSV and JSON report emission."""

import csv
import io
import json
import math
import os
import platform
import sys
from datetime import datetime, timezone

from mvprune import __version__
from mvprune.analytics import complexity, complexity_reduction
from mvprune.rate_model import format_threshold

__all__ = [
    "fmt",
    "RUN_COLUMNS",
    "BLOCK_COLUMNS",
    "run_rows",
    "block_rows",
    "write_csv",
    "write_json",
    "write_sidecar",
    "REPORT_NOTES",
]

RUN_COLUMNS = [
    "sequence", "class", "pattern", "threshold", "qp", "blocks", "evaluated",
    "skipped_by_rate", "complexity", "complexity_baseline", "delta_c_percent",
    "total_cost", "mv_bits", "distortion", "bitrate_proxy", "psnr_db", "pearson",
]

BLOCK_COLUMNS = [
    "sequence", "threshold", "qp", "frame", "width", "height", "x", "y",
    "mvp_x", "mvp_y", "mv_x", "mv_y", "distortion", "rate_bits", "cost",
    "evaluated", "skipped_by_rate",
]

REPORT_NOTES = {
    "prediction": "single reference (previous frame), low-delay P style; "
                  "random-access GOPs are not modelled",
    "partitioning": "fixed block grid per configured size, no partition search",
    "octagonal": "octagonal-axis raster is a parameterised approximation",
    "correlation": "Pearson r of rate vs ln(count + 1) over all heatmap cells",
    "heatmap_normalization": "raw decision counts summed over sequences, QPs "
                             "and block sizes",
    "bitrate_proxy": "sum of MVD bits plus SAD; not an encoded bitrate",
}


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6f}"
    return str(value)


def run_rows(main, baseline):
    base = {(s.sequence, s.qp): s for s in baseline}
    rows = []
    for s in main:
        b = base.get((s.sequence, s.qp))
        c_mod = s.complexity
        c_ori = b.complexity if b is not None else None
        dc = complexity_reduction(c_ori, c_mod) if c_ori else None
        rows.append({
            "sequence": s.sequence,
            "class": s.seq_class,
            "pattern": s.pattern,
            "threshold": format_threshold(s.threshold),
            "qp": s.qp,
            "blocks": len(s.blocks),
            "evaluated": s.evaluated,
            "skipped_by_rate": s.skipped,
            "complexity": c_mod,
            "complexity_baseline": c_ori,
            "delta_c_percent": dc,
            "total_cost": s.total_cost,
            "mv_bits": s.mv_bits,
            "distortion": s.distortion,
            "bitrate_proxy": s.bitrate_proxy,
            "psnr_db": s.mean_psnr,
            "pearson": s.pearson(),
        })
    return rows


def block_rows(main):
    for s in main:
        t = format_threshold(s.threshold)
        for b in s.blocks:
            yield {
                "sequence": s.sequence, "threshold": t, "qp": s.qp,
                "frame": b.frame, "width": b.width, "height": b.height,
                "x": b.x, "y": b.y, "mvp_x": b.mvp.x, "mvp_y": b.mvp.y,
                "mv_x": b.mv.x, "mv_y": b.mv.y, "distortion": b.distortion,
                "rate_bits": b.rate_bits, "cost": b.cost_scaled / 256,
                "evaluated": b.evaluated, "skipped_by_rate": b.skipped,
            }


def write_csv(path, columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return fmt(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sidecar(out_dir, command, threads, extra=None):
    """Run metadata that legitimately varies between runs lives here."""
    meta = {
        "command": command,
        "threads": threads,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "python": sys.version.split()[0],
        "platform": platform.platform(),
    }
    meta.update(extra or {})
    write_json(os.path.join(out_dir, "run_meta.json"), meta)
