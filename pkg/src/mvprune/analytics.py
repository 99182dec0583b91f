"""
Complexity accounting, MV decision heatmaps, rate/heatmap correlation,
PSNR and Bjontegaard delta rate.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

__all__ = [
    "SearchStats",
    "Heatmap",
    "RdPoint",
    "RdCurve",
    "complexity",
    "complexity_reduction",
    "record_decision",
    "rate_heatmap_correlation",
    "pearson",
    "psnr",
    "bd_rate",
    "write_grid_csv",
    "write_pgm",
]

BlockSize = Tuple[int, int]


@dataclass
class SearchStats:
    """Distortion evaluations per block size ``(width, height)``."""

    candidates: Dict[BlockSize, int] = field(default_factory=dict)

    def add(self, size: BlockSize, evaluated: int):
        if evaluated < 0:
            raise ValueError("evaluation count must be non-negative")
        size = (int(size[0]), int(size[1]))
        self.candidates[size] = self.candidates.get(size, 0) + int(evaluated)

    def merge(self, other: "SearchStats") -> "SearchStats":
        total = Counter(self.candidates)
        total.update(other.candidates)
        return SearchStats({k: total[k] for k in sorted(total)})

    def __add__(self, other):
        return self.merge(other)

    @staticmethod
    def area(size: BlockSize) -> int:
        return size[0] * size[1]


def complexity(stats: SearchStats) -> int:
    """Sum over block sizes of evaluated candidates times block area."""
    return sum(n * SearchStats.area(s) for s, n in stats.candidates.items())


def complexity_reduction(c_ori, c_mod) -> float:
    """Percentage of the baseline complexity removed; negative if it grew."""
    if c_ori <= 0:
        raise ZeroDivisionError("baseline complexity must be positive")
    return (c_ori - c_mod) / c_ori * 100.0


class Heatmap:
    """Counts of chosen MVDs on a ``(2*radius+1)**2`` grid centred on the MVP."""

    def __init__(self, radius: int):
        if radius < 0:
            raise ValueError("radius must be non-negative")
        self.radius = int(radius)
        self.counts = np.zeros((2 * radius + 1, 2 * radius + 1), dtype=np.int64)
        self.overflow = 0

    @property
    def decisions(self) -> int:
        return int(self.counts.sum()) + self.overflow

    def record(self, mvd):
        dx, dy = mvd
        r = self.radius
        if abs(dx) > r or abs(dy) > r:
            self.overflow += 1
        else:
            self.counts[dy + r, dx + r] += 1
        return self

    def merge(self, other: "Heatmap") -> "Heatmap":
        if other.radius != self.radius:
            raise ValueError("heatmap radii differ")
        out = Heatmap(self.radius)
        out.counts = self.counts + other.counts
        out.overflow = self.overflow + other.overflow
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Heatmap)
            and self.radius == other.radius
            and self.overflow == other.overflow
            and np.array_equal(self.counts, other.counts)
        )


def record_decision(heatmap: Heatmap, mvd) -> Heatmap:
    return heatmap.record(mvd)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("series lengths differ")
    if x.size < 2:
        raise ValueError("need at least two pairs")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance series")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def rate_heatmap_correlation(heatmap, surface, zero_policy="log1p") -> float:
    """
    Pearson r between rate cells and log decision counts.

    ``zero_policy`` picks the log transform: ``"log1p"`` uses ln(count + 1)
    so empty cells participate; ``"exclude"`` drops empty cells and uses
    ln(count).
    """
    counts = heatmap.counts if isinstance(heatmap, Heatmap) else heatmap
    counts = np.asarray(counts, dtype=np.float64)
    surface = np.asarray(surface, dtype=np.float64)
    if counts.shape != surface.shape:
        raise ValueError(f"grid shapes differ: {counts.shape} vs {surface.shape}")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    if zero_policy == "log1p":
        return pearson(surface, np.log1p(counts))
    if zero_policy == "exclude":
        keep = counts > 0
        return pearson(surface[keep], np.log(counts[keep]))
    raise ValueError(f"unknown zero_policy {zero_policy!r}")


def psnr(a, b, peak=255) -> float:
    """PSNR in dB between two 8-bit planes; ``math.inf`` when identical."""
    a = getattr(a, "samples", a)
    b = getattr(b, "samples", b)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"plane shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


@dataclass(frozen=True)
class RdPoint:
    bitrate: float
    quality: float


class RdCurve:
    """Rate-distortion points kept sorted by strictly increasing bitrate."""

    def __init__(self, points: Sequence):
        pts = sorted(
            (p if isinstance(p, RdPoint) else RdPoint(*p) for p in points),
            key=lambda p: p.bitrate,
        )
        if len(pts) < 4:
            raise ValueError("an RD curve needs at least 4 points")
        for a, b in zip(pts, pts[1:]):
            if not b.bitrate > a.bitrate:
                raise ValueError("bitrates must be strictly increasing")
        if pts[0].bitrate <= 0:
            raise ValueError("bitrates must be positive")
        self.points = tuple(pts)

    @property
    def bitrates(self):
        return np.array([p.bitrate for p in self.points])

    @property
    def qualities(self):
        return np.array([p.quality for p in self.points])


def _integrate_cubic(q, log_r, lo, hi):
    coeffs = np.polyfit(q, log_r, 3)
    integral = np.polyint(coeffs)
    return np.polyval(integral, hi) - np.polyval(integral, lo)


def _integrate_pchip(q, log_r, lo, hi):
    from scipy.interpolate import PchipInterpolator

    order = np.argsort(q)
    interp = PchipInterpolator(q[order], log_r[order])
    return float(interp.integrate(lo, hi))


def bd_rate(anchor, test, method="cubic") -> float:
    """
    Average bitrate difference of ``test`` versus ``anchor`` in percent at
    equal quality, from log10-rate fits integrated over the common quality
    interval. ``method`` is ``"cubic"`` (polynomial fit) or ``"pchip"``.
    """
    anchor = anchor if isinstance(anchor, RdCurve) else RdCurve(anchor)
    test = test if isinstance(test, RdCurve) else RdCurve(test)
    qa, qt = anchor.qualities, test.qualities
    ra, rt = np.log10(anchor.bitrates), np.log10(test.bitrates)
    lo = max(qa.min(), qt.min())
    hi = min(qa.max(), qt.max())
    if not hi > lo:
        raise ValueError("quality ranges do not overlap")
    if len(np.unique(qa)) < 4 or len(np.unique(qt)) < 4:
        raise ValueError("degenerate fit: need 4 distinct quality values")
    if method == "cubic":
        integrate = _integrate_cubic
    elif method == "pchip":
        integrate = _integrate_pchip
    else:
        raise ValueError(f"unknown BD-rate method {method!r}")
    avg_diff = (integrate(qt, rt, lo, hi) - integrate(qa, ra, lo, hi)) / (hi - lo)
    return (10.0 ** avg_diff - 1.0) * 100.0


def write_grid_csv(grid, stream):
    """Integer grid as CSV, one row per line, row-major."""
    for row in np.asarray(grid):
        stream.write(",".join(str(int(v)) for v in row))
        stream.write("\n")


def write_pgm(grid, stream, comment=None):
    """
    Binary 8-bit PGM; values are scaled linearly so the grid maximum maps
    to 255 (an all-zero grid stays black).
    """
    g = np.asarray(grid, dtype=np.float64)
    top = g.max() if g.size else 0.0
    img = np.zeros(g.shape, dtype=np.uint8) if top <= 0 else np.rint(
        np.clip(g, 0, None) * (255.0 / top)
    ).astype(np.uint8)
    header = "P5\n"
    if comment:
        for line in str(comment).splitlines():
            header += f"# {line}\n"
    header += f"{g.shape[1]} {g.shape[0]}\n255\n"
    stream.write(header.encode("ascii"))
    stream.write(img.tobytes())
