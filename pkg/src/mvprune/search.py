"""
Integer-pel search patterns and rate-based candidate elimination.

Every pattern funnels its candidates through one evaluator which checks the
MVD rate against the context threshold *before* touching reference samples.
Patterns therefore never need to know whether elimination is active;
:func:`with_rate_elimination` only swaps the threshold on the context.
"""

import functools
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple, Optional, Tuple

import numpy as np

from mvprune.frame_io import BlockGeometry, LumaFrame, PaddedReference, extract_block
from mvprune.motion_core import (
    LAMBDA_SCALE,
    Cost,
    CostModel,
    MotionVector,
    ZERO_MV,
)
from mvprune.rate_model import UNBOUNDED, RateTable, Threshold

__all__ = [
    "NoAdmissibleCandidate",
    "SearchWindow",
    "SearchContext",
    "SearchResult",
    "TraceEntry",
    "TzsConfig",
    "diamond_points",
    "raster_points",
    "octagonal_points",
    "full_search",
    "tzs_search",
    "octagonal_axis_raster",
    "with_rate_elimination",
    "PATTERNS",
]


class NoAdmissibleCandidate(RuntimeError):
    """The threshold rejected every candidate the pattern produced."""


@dataclass(frozen=True)
class SearchWindow:
    """
    Square window of half-width ``range`` around ``center``, optionally
    clipped to ``bounds = (min_x, max_x, min_y, max_y)``.
    """

    center: MotionVector
    range: int
    bounds: Optional[Tuple[int, int, int, int]] = None

    def __post_init__(self):
        if self.range < 0:
            raise ValueError("search range must be non-negative")
        object.__setattr__(self, "center", MotionVector(*self.center))

    @classmethod
    def for_block(cls, center, search_range, geom: BlockGeometry, frame_width,
                  frame_height, margin=0):
        """Window whose candidates keep the block within ``margin`` pels of the frame."""
        bounds = (
            -geom.origin_x - margin,
            frame_width - geom.origin_x - geom.width + margin,
            -geom.origin_y - margin,
            frame_height - geom.origin_y - geom.height + margin,
        )
        return cls(MotionVector(*center), int(search_range), bounds)

    def limits(self):
        cx, cy = self.center
        x0, x1 = cx - self.range, cx + self.range
        y0, y1 = cy - self.range, cy + self.range
        if self.bounds is not None:
            bx0, bx1, by0, by1 = self.bounds
            x0, x1 = max(x0, bx0), min(x1, bx1)
            y0, y1 = max(y0, by0), min(y1, by1)
        return x0, x1, y0, y1

    def contains(self, mv) -> bool:
        x0, x1, y0, y1 = self.limits()
        return x0 <= mv[0] <= x1 and y0 <= mv[1] <= y1

    def clip(self, mv) -> MotionVector:
        """Clamp ``mv`` into the frame bounds (the range is ignored)."""
        if self.bounds is None:
            return MotionVector(*mv)
        bx0, bx1, by0, by1 = self.bounds
        return MotionVector(min(max(mv[0], bx0), bx1), min(max(mv[1], by0), by1))

    def area(self) -> int:
        x0, x1, y0, y1 = self.limits()
        return max(0, x1 - x0 + 1) * max(0, y1 - y0 + 1)


@dataclass(frozen=True)
class SearchContext:
    """One block-matching problem."""

    geometry: BlockGeometry
    original: np.ndarray
    reference: PaddedReference
    window: SearchWindow
    cost_model: CostModel
    threshold: Threshold = UNBOUNDED
    neighbors: Mapping[str, Optional[MotionVector]] = field(default_factory=dict)

    @classmethod
    def build(cls, current: LumaFrame, reference, geom: BlockGeometry, *,
              search_range, lambda_, mvp=ZERO_MV, threshold=UNBOUNDED,
              margin=0, neighbors=None, rate_table=None):
        if not geom.fits(current):
            raise ValueError(f"block {tuple(geom)} does not fit the current frame")
        if not isinstance(reference, PaddedReference):
            reference = PaddedReference(reference, margin)
        frame = reference.frame
        if (frame.width, frame.height) != (current.width, current.height):
            raise ValueError("current and reference frames differ in size")
        window = SearchWindow.for_block(
            mvp, search_range, geom, frame.width, frame.height, margin
        )
        mvp = window.clip(mvp)
        window = replace(window, center=mvp)
        if rate_table is None:
            rate_table = RateTable.for_search_range(search_range)
        return cls(
            geometry=geom,
            original=extract_block(current, geom).astype(np.int32),
            reference=reference,
            window=window,
            cost_model=CostModel(lambda_, rate_table, mvp),
            threshold=threshold,
            neighbors=dict(neighbors or {}),
        )

    @property
    def mvp(self) -> MotionVector:
        return self.cost_model.mvp

    def with_threshold(self, t: Threshold) -> "SearchContext":
        return replace(self, threshold=t)


class TraceEntry(NamedTuple):
    mv: MotionVector
    rate_bits: int
    evaluated: bool


@dataclass(frozen=True)
class SearchResult:
    best_mv: MotionVector
    best_cost: Cost
    evaluated: int
    skipped_by_rate: int
    trace: Tuple[TraceEntry, ...] = ()

    @property
    def candidates(self) -> int:
        return self.evaluated + self.skipped_by_rate


@dataclass(frozen=True)
class TzsConfig:
    raster_step: int = 5
    raster_trigger_distance: int = 5
    max_refinement_rounds: int = 32
    extra_start_candidates: Tuple[str, ...] = ("zero", "left", "above")
    # consecutive non-improving diamond layers before a diamond expansion stops;
    # 0 expands all the way to the search range
    diamond_stop_rounds: int = 3
    diamond: str = "8point"
    raster: str = "plain"
    octagon_extent: float = 1.0
    octagon_l1: float = 1.5

    def __post_init__(self):
        if self.raster_step < 1:
            raise ValueError("raster_step must be >= 1")
        if self.raster_trigger_distance < 0:
            raise ValueError("raster_trigger_distance must be >= 0")
        if self.max_refinement_rounds < 0:
            raise ValueError("max_refinement_rounds must be >= 0")
        if self.diamond_stop_rounds < 0:
            raise ValueError("diamond_stop_rounds must be >= 0")
        if self.diamond not in ("8point", "4point"):
            raise ValueError(f"unknown diamond shape {self.diamond!r}")
        if self.raster not in ("plain", "octagonal"):
            raise ValueError(f"unknown raster pattern {self.raster!r}")
        unknown = set(self.extra_start_candidates) - set(_START_SOURCES)
        if unknown:
            raise ValueError(f"unknown start candidate sources {sorted(unknown)}")


_START_SOURCES = ("zero", "left", "above", "above_right")


class _Evaluator:
    """Shared per-search state: admission, SAD, incumbent and counters."""

    def __init__(self, ctx: SearchContext, record_trace=False):
        self.ctx = ctx
        self.geom = ctx.geometry
        self.mvp = ctx.cost_model.mvp
        self.table = ctx.cost_model.rate_table
        self.lam = ctx.cost_model.lambda_scaled
        self.t = ctx.threshold
        self.window = ctx.window
        self.visited = set()
        self.trace = [] if record_trace else None
        self.evaluated = 0
        self.skipped = 0
        self.best_mv = None
        self.best_cost = None
        self.best_key = None
        self.best_distance = 0

    def test(self, mv, distance=0) -> bool:
        """Offer one candidate; True if it became the new incumbent."""
        if mv in self.visited:
            return False
        self.visited.add(mv)
        rate = self.table.mvd_rate(mv[0] - self.mvp[0], mv[1] - self.mvp[1])
        if rate > self.t:
            self.skipped += 1
            if self.trace is not None:
                self.trace.append(TraceEntry(mv, rate, False))
            return False
        cand = self.ctx.reference.block(self.geom, mv)
        d = int(np.abs(self.ctx.original - cand).sum())
        self.evaluated += 1
        if self.trace is not None:
            self.trace.append(TraceEntry(mv, rate, True))
        scaled = d * LAMBDA_SCALE + self.lam * rate
        key = (scaled, rate, abs(mv[1]), abs(mv[0]))
        if self.best_key is None or key < self.best_key:
            self.best_key = key
            self.best_mv = mv
            self.best_cost = Cost(scaled, d, rate)
            self.best_distance = distance
            return True
        return False

    def test_all(self, points, distance=0) -> bool:
        improved = False
        for p in points:
            improved |= self.test(p, distance)
        return improved

    def result(self) -> SearchResult:
        if self.best_mv is None:
            raise NoAdmissibleCandidate(
                f"threshold {self.t} admitted none of {self.skipped} candidates"
            )
        return SearchResult(
            best_mv=self.best_mv,
            best_cost=self.best_cost,
            evaluated=self.evaluated,
            skipped_by_rate=self.skipped,
            trace=tuple(self.trace) if self.trace is not None else (),
        )


def diamond_points(center, distance, window: SearchWindow = None, shape="8point"):
    """
    One diamond layer around ``center``.

    The 8-point layer holds the four axis points at ``distance`` and four
    diagonal points at ``distance // 2``; at distance 1 the diagonals
    collapse onto the centre and only the cross remains.
    """
    if distance < 1:
        raise ValueError("distance must be >= 1")
    cx, cy = center
    d = distance
    h = d // 2
    if shape == "4point" or h == 0:
        offsets = [(0, -d), (-d, 0), (d, 0), (0, d)]
    else:
        offsets = [(0, -d), (-h, -h), (h, -h), (-d, 0), (d, 0), (-h, h), (h, h), (0, d)]
    points = [MotionVector(cx + dx, cy + dy) for dx, dy in offsets]
    if window is not None:
        points = [p for p in points if window.contains(p)]
    return points


def _lattice(window: SearchWindow, step):
    if step < 1:
        raise ValueError("step must be >= 1")
    cx, cy = window.center
    x0, x1, y0, y1 = window.limits()
    r = window.range
    offs = range(-(r // step) * step, r + 1, step)
    xs = [cx + o for o in offs if x0 <= cx + o <= x1]
    ys = [cy + o for o in offs if y0 <= cy + o <= y1]
    return xs, ys


def raster_points(window: SearchWindow, step):
    """Lattice of stride ``step`` through the window centre, row-major."""
    xs, ys = _lattice(window, step)
    return [MotionVector(x, y) for y in ys for x in xs]


def octagonal_points(window: SearchWindow, step, extent=1.0, l1=1.5):
    """
    Raster lattice restricted to the two axes through the centre plus an
    octagon: ``max(|dx|,|dy|) <= extent*range`` and ``|dx|+|dy| <= l1*range``.

    This parameterised octagon approximates the published Octagonal-axis
    pattern; its exact geometry is not reproduced.
    """
    cx, cy = window.center
    r = window.range
    cheb = extent * r
    diag = l1 * r
    out = []
    for p in raster_points(window, step):
        dx, dy = abs(p.x - cx), abs(p.y - cy)
        if dx == 0 or dy == 0 or (max(dx, dy) <= cheb and dx + dy <= diag):
            out.append(p)
    return out


def full_search(ctx: SearchContext, *, record_trace=False) -> SearchResult:
    """Exhaustive scan of the window in row-major order."""
    ev = _Evaluator(ctx, record_trace)
    x0, x1, y0, y1 = ctx.window.limits()
    test = ev.test
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            test(MotionVector(x, y))
    return ev.result()


def _expand_diamond(ev: _Evaluator, center, cfg: TzsConfig):
    """Diamonds at distances 1, 2, 4, ... up to the search range."""
    misses = 0
    dist = 1
    while dist <= ev.window.range:
        pts = diamond_points(center, dist, ev.window, cfg.diamond)
        if ev.test_all(pts, dist):
            misses = 0
        else:
            misses += 1
            if cfg.diamond_stop_rounds and misses >= cfg.diamond_stop_rounds:
                break
        dist *= 2


def _start_candidates(ctx: SearchContext, cfg: TzsConfig):
    cands = [ctx.mvp]
    for src in cfg.extra_start_candidates:
        mv = ZERO_MV if src == "zero" else ctx.neighbors.get(src)
        if mv is not None:
            cands.append(MotionVector(*mv))
    return cands


def _raster_set(ctx, cfg):
    if cfg.raster == "octagonal":
        return octagonal_points(ctx.window, cfg.raster_step, cfg.octagon_extent, cfg.octagon_l1)
    return raster_points(ctx.window, cfg.raster_step)


def tzs_search(ctx: SearchContext, cfg: TzsConfig = TzsConfig(), *,
               record_trace=False) -> SearchResult:
    """
    Test Zone Search: start selection, first diamond search, conditional
    raster scan, then iterative diamond refinement around the incumbent.
    """
    ev = _Evaluator(ctx, record_trace)

    for mv in _start_candidates(ctx, cfg):
        if ctx.window.contains(mv):
            ev.test(mv, 0)
    start = ev.best_mv if ev.best_mv is not None else ctx.window.center

    ev.best_distance = 0
    _expand_diamond(ev, start, cfg)

    if ev.best_distance > cfg.raster_trigger_distance:
        ev.test_all(_raster_set(ctx, cfg), cfg.raster_step)

    rounds = 0
    while ev.best_distance > 0 and rounds < cfg.max_refinement_rounds and ev.best_mv is not None:
        center = ev.best_mv
        ev.best_distance = 0
        _expand_diamond(ev, center, cfg)
        rounds += 1

    return ev.result()


def octagonal_axis_raster(ctx: SearchContext, cfg: TzsConfig = TzsConfig(), *,
                          record_trace=False) -> SearchResult:
    """Standalone scan of the octagonal-axis lattice around the window centre."""
    ev = _Evaluator(ctx, record_trace)
    ev.test_all(
        octagonal_points(ctx.window, cfg.raster_step, cfg.octagon_extent, cfg.octagon_l1)
    )
    return ev.result()


def with_rate_elimination(inner, t: Threshold):
    """
    Wrap a search pattern so that candidates whose MVD rate exceeds ``t``
    are skipped before any distortion is computed.
    """

    @functools.wraps(inner)
    def pattern(ctx: SearchContext, *args, **kwargs):
        return inner(ctx.with_threshold(t), *args, **kwargs)

    pattern.threshold = t
    return pattern


def _tzs_octagonal(ctx, cfg=TzsConfig(), **kw):
    return tzs_search(ctx, replace(cfg, raster="octagonal"), **kw)


#: Pattern names accepted by the harness.
PATTERNS = {
    "full": lambda ctx, cfg, **kw: full_search(ctx, **kw),
    "tzs": tzs_search,
    "octagonal": _tzs_octagonal,
}
