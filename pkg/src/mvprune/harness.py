"""
Experiment configuration and the frame/block driver behind the CLI.

Each frame is predicted from the previous one only. Blocks form a fixed
grid per configured size and are visited in raster order so that the
left, above and above-right neighbours are final when an MVP is derived.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from mvprune.analytics import (
    Heatmap,
    RdCurve,
    SearchStats,
    bd_rate,
    complexity,
    complexity_reduction,
    psnr,
    rate_heatmap_correlation,
)
from mvprune.frame_io import BlockGeometry, PaddedReference, load_frames
from mvprune.motion_core import LAMBDA_SCALE, MotionVector, lambda_from_qp, predict_mv
from mvprune.rate_model import (
    UNBOUNDED,
    RateTable,
    format_threshold,
    parse_threshold,
    rate_surface,
)
from mvprune.search import PATTERNS, SearchContext, TzsConfig

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "BlockRecord",
    "RunSummary",
    "run_experiment",
    "run_sequence",
    "parse_kv",
]

ALLOWED_DIMS = (8, 16, 32, 64, 128)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _parse_sizes(text):
    sizes = []
    for tok in str(text).replace(" ", "").split(","):
        if not tok:
            continue
        parts = tok.lower().split("x")
        try:
            if len(parts) == 1:
                w = h = int(parts[0])
            elif len(parts) == 2:
                w, h = int(parts[0]), int(parts[1])
            else:
                raise ValueError
        except ValueError:
            raise ConfigError(f"block size {tok!r} is not WxH or N") from None
        sizes.append((w, h))
    return tuple(sizes)


def _parse_int_list(text, name):
    try:
        return tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)
    except ValueError:
        raise ConfigError(f"{name} must be a comma-separated list of integers") from None


def _parse_str_list(text):
    return tuple(t for t in str(text).replace(" ", "").split(",") if t)


def _optional_int(text, name):
    s = str(text).strip().lower()
    if s in ("", "none", "all"):
        return None
    try:
        return int(s)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None


def _int(text, name):
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    inputs: Tuple[str, ...] = ()
    raw_width: Optional[int] = None
    raw_height: Optional[int] = None
    block_sizes: Tuple[Tuple[int, int], ...] = ((16, 16), (8, 8))
    search_range: int = 64
    pattern: str = "tzs"
    threshold: float = UNBOUNDED
    qps: Tuple[int, ...] = (22, 27, 32, 37)
    frames: Optional[int] = None
    out: str = "out"
    margin: int = 16
    raster_step: int = 5
    raster_trigger_distance: int = 5
    max_refinement_rounds: int = 32
    diamond_stop_rounds: int = 3
    start_candidates: Tuple[str, ...] = ("zero", "left", "above")
    heatmap_radius: Optional[int] = None
    classes: Tuple[str, ...] = ()
    baseline: bool = True

    _PARSERS = {
        "inputs": lambda v: _parse_str_list(v),
        "raw_width": lambda v: _optional_int(v, "raw_width"),
        "raw_height": lambda v: _optional_int(v, "raw_height"),
        "block_sizes": _parse_sizes,
        "search_range": lambda v: _int(v, "search_range"),
        "pattern": lambda v: str(v).strip(),
        "threshold": None,
        "qps": lambda v: _parse_int_list(v, "qps"),
        "frames": lambda v: _optional_int(v, "frames"),
        "out": lambda v: str(v).strip(),
        "margin": lambda v: _int(v, "margin"),
        "raster_step": lambda v: _int(v, "raster_step"),
        "raster_trigger_distance": lambda v: _int(v, "raster_trigger_distance"),
        "max_refinement_rounds": lambda v: _int(v, "max_refinement_rounds"),
        "diamond_stop_rounds": lambda v: _int(v, "diamond_stop_rounds"),
        "start_candidates": _parse_str_list,
        "heatmap_radius": lambda v: _optional_int(v, "heatmap_radius"),
        "classes": _parse_str_list,
        "baseline": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
    }

    @classmethod
    def from_mapping(cls, values: Dict[str, object]) -> "ExperimentConfig":
        kwargs = {}
        for key, raw in values.items():
            name = key.strip().replace("-", "_")
            if name not in cls._PARSERS:
                raise ConfigError(f"unknown configuration key {key!r}")
            if raw is None:
                continue
            if name == "threshold":
                try:
                    kwargs[name] = parse_threshold(raw)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
            elif isinstance(raw, str):
                kwargs[name] = cls._PARSERS[name](raw)
            else:
                kwargs[name] = raw
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        if not self.inputs:
            raise ConfigError("no input given (use --input)")
        if (self.raw_width is None) != (self.raw_height is None):
            raise ConfigError("raw input needs both --raw-width and --raw-height")
        if not self.block_sizes:
            raise ConfigError("at least one block size is required")
        for w, h in self.block_sizes:
            if w not in ALLOWED_DIMS or h not in ALLOWED_DIMS:
                raise ConfigError(
                    f"block size {w}x{h} not allowed; dimensions must be in {ALLOWED_DIMS}"
                )
        if self.search_range < 1:
            raise ConfigError("search range must be >= 1")
        if self.pattern not in PATTERNS:
            raise ConfigError(
                f"unknown pattern {self.pattern!r}; choose from {sorted(PATTERNS)}"
            )
        if self.threshold != UNBOUNDED and self.threshold < 2:
            raise ConfigError("a bounded threshold must be >= 2 bits (the MVP costs 2)")
        if not self.qps:
            raise ConfigError("qp list must not be empty")
        for qp in self.qps:
            if not 0 <= qp <= 51:
                raise ConfigError(f"qp {qp} outside [0, 51]")
        if self.frames is not None and self.frames < 2:
            raise ConfigError("need >= 2 frames (one reference plus one current)")
        if self.margin < 0:
            raise ConfigError("margin must be >= 0")
        if self.heatmap_radius is not None and self.heatmap_radius < 0:
            raise ConfigError("heatmap radius must be >= 0")
        if self.classes and len(self.classes) != len(self.inputs):
            raise ConfigError("classes must list one entry per input")
        try:
            self.tzs_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def tzs_config(self) -> TzsConfig:
        return TzsConfig(
            raster_step=self.raster_step,
            raster_trigger_distance=self.raster_trigger_distance,
            max_refinement_rounds=self.max_refinement_rounds,
            extra_start_candidates=tuple(self.start_candidates),
            diamond_stop_rounds=self.diamond_stop_rounds,
        )

    @property
    def effective_heatmap_radius(self):
        return self.search_range if self.heatmap_radius is None else self.heatmap_radius

    def class_of(self, index):
        return self.classes[index] if self.classes else sequence_name(self.inputs[index])

    def to_mapping(self) -> Dict[str, str]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "threshold":
                s = format_threshold(v)
            elif f.name == "block_sizes":
                s = ",".join(f"{w}x{h}" for w, h in v)
            elif isinstance(v, tuple):
                s = ",".join(str(x) for x in v)
            elif v is None:
                s = "none"
            elif isinstance(v, bool):
                s = "true" if v else "false"
            else:
                s = str(v)
            out[f.name] = s
        return out

    def to_kv(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.to_mapping().items())


def parse_kv(text: str) -> Dict[str, str]:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def sequence_name(path):
    return os.path.splitext(os.path.basename(path))[0]


@dataclass(frozen=True)
class BlockRecord:
    frame: int
    width: int
    height: int
    x: int
    y: int
    mvp: MotionVector
    mv: MotionVector
    distortion: int
    rate_bits: int
    cost_scaled: int
    evaluated: int
    skipped: int


def _block_grid(frame_w, frame_h, w, h):
    return frame_w // w, frame_h // h


def _search_size(cur, ref_padded, size, cfg: ExperimentConfig, lam, threshold,
                 table, pattern) -> List[BlockRecord]:
    w, h = size
    cols, rows = _block_grid(cur.width, cur.height, w, h)
    tzs_cfg = cfg.tzs_config()
    mvs = {}
    records = []
    for by in range(rows):
        for bx in range(cols):
            left = mvs.get((bx - 1, by))
            above = mvs.get((bx, by - 1))
            above_right = mvs.get((bx + 1, by - 1))
            mvp = predict_mv([left, above, above_right])
            geom = BlockGeometry(bx * w, by * h, w, h)
            ctx = SearchContext.build(
                cur, ref_padded, geom,
                search_range=cfg.search_range, lambda_=lam, mvp=mvp,
                threshold=threshold, margin=cfg.margin,
                neighbors={"left": left, "above": above, "above_right": above_right},
                rate_table=table,
            )
            res = pattern(ctx, tzs_cfg)
            mvs[(bx, by)] = res.best_mv
            records.append(BlockRecord(
                cur.frame_index, w, h, geom.origin_x, geom.origin_y, ctx.mvp,
                res.best_mv, res.best_cost.distortion, res.best_cost.rate_bits,
                res.best_cost.scaled, res.evaluated, res.skipped_by_rate,
            ))
    return records


def _prediction_psnr(cur, ref_padded, records, size):
    """PSNR of the motion-compensated prediction over the tiled area."""
    w, h = size
    cols, rows = _block_grid(cur.width, cur.height, w, h)
    pred = np.zeros((rows * h, cols * w), dtype=np.int32)
    for r in records:
        geom = BlockGeometry(r.x, r.y, w, h)
        pred[r.y : r.y + h, r.x : r.x + w] = ref_padded.block(geom, r.mv)
    return psnr(cur.samples[: rows * h, : cols * w], pred)


@dataclass
class RunSummary:
    """Aggregate of one (sequence, pattern, threshold, qp) run."""

    sequence: str
    seq_class: str
    pattern: str
    threshold: float
    qp: int
    blocks: List[BlockRecord] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)
    heatmap: Heatmap = None
    psnr_values: List[float] = field(default_factory=list)

    @property
    def complexity(self):
        return complexity(self.stats)

    @property
    def evaluated(self):
        return sum(b.evaluated for b in self.blocks)

    @property
    def skipped(self):
        return sum(b.skipped for b in self.blocks)

    @property
    def total_cost_scaled(self):
        return sum(b.cost_scaled for b in self.blocks)

    @property
    def total_cost(self):
        return self.total_cost_scaled / LAMBDA_SCALE

    @property
    def mv_bits(self):
        return sum(b.rate_bits for b in self.blocks)

    @property
    def distortion(self):
        return sum(b.distortion for b in self.blocks)

    @property
    def bitrate_proxy(self):
        return self.mv_bits + self.distortion

    @property
    def mean_psnr(self):
        finite = [p for p in self.psnr_values if math.isfinite(p)]
        if not self.psnr_values:
            return math.nan
        if not finite:
            return math.inf
        return sum(finite) / len(finite)

    def pearson(self):
        try:
            return rate_heatmap_correlation(self.heatmap, rate_surface(self.heatmap.radius))
        except ValueError:
            return None


def run_sequence(frames, cfg: ExperimentConfig, *, name="seq", seq_class=None,
                 threshold=None, qps=None, threads=1) -> List[RunSummary]:
    """Run the configured pattern over every frame pair; one summary per QP."""
    if len(frames) < 2:
        raise ConfigError(f"{name}: need >= 2 frames, got {len(frames)}")
    threshold = cfg.threshold if threshold is None else threshold
    qps = cfg.qps if qps is None else qps
    pattern = PATTERNS[cfg.pattern]
    table = RateTable.for_search_range(cfg.search_range)
    padded = [PaddedReference(f, cfg.margin) for f in frames[:-1]]

    tasks = [
        (qp, k, size)
        for qp in qps
        for k in range(1, len(frames))
        for size in cfg.block_sizes
    ]

    def work(task):
        qp, k, size = task
        recs = _search_size(frames[k], padded[k - 1], size, cfg, lambda_from_qp(qp),
                            threshold, table, pattern)
        return recs, _prediction_psnr(frames[k], padded[k - 1], recs, size)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(work, tasks))
    else:
        outputs = [work(t) for t in tasks]

    summaries = {
        qp: RunSummary(name, seq_class or name, cfg.pattern, threshold, qp,
                       heatmap=Heatmap(cfg.effective_heatmap_radius))
        for qp in qps
    }
    for (qp, _, size), (recs, p) in zip(tasks, outputs):
        s = summaries[qp]
        s.blocks.extend(recs)
        s.psnr_values.append(p)
        for r in recs:
            s.stats.add(size, r.evaluated)
            s.heatmap.record((r.mv.x - r.mvp.x, r.mv.y - r.mvp.y))
    return [summaries[qp] for qp in qps]


def load_inputs(cfg: ExperimentConfig):
    out = []
    for i, path in enumerate(cfg.inputs):
        frames = load_frames(path, cfg.raw_width, cfg.raw_height, cfg.frames)
        if len(frames) < 2:
            raise ConfigError(f"{path}: need >= 2 frames, got {len(frames)}")
        out.append((sequence_name(path), cfg.class_of(i), frames))
    return out


def run_experiment(cfg: ExperimentConfig, threads=1, inputs=None):
    """
    Run ``cfg`` over all inputs. Returns ``(main, baseline)`` lists of
    :class:`RunSummary`; ``baseline`` holds the same pattern with an
    unbounded threshold (reused from ``main`` when already unbounded).
    """
    inputs = load_inputs(cfg) if inputs is None else inputs
    main, base = [], []
    for name, cls, frames in inputs:
        runs = run_sequence(frames, cfg, name=name, seq_class=cls, threads=threads)
        main.extend(runs)
        if cfg.baseline and cfg.threshold != UNBOUNDED:
            base.extend(run_sequence(frames, cfg, name=name, seq_class=cls,
                                     threshold=UNBOUNDED, threads=threads))
        else:
            base.extend(runs)
    return main, base


def rd_bd_rate(anchor: List[RunSummary], test: List[RunSummary]):
    """BD-rate on the bitrate proxy; None when the curves are unusable."""
    try:
        a = RdCurve([(s.bitrate_proxy, s.mean_psnr) for s in anchor])
        t = RdCurve([(s.bitrate_proxy, s.mean_psnr) for s in test])
        value = bd_rate(a, t)
    except (ValueError, np.linalg.LinAlgError):
        return None
    return value if math.isfinite(value) else None


def config_json(cfg: ExperimentConfig):
    return cfg.to_mapping()
