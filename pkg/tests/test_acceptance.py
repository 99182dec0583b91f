"""
Exit criteria. Each test records a PASS/FAIL line that is printed in the
pytest terminal summary under "acceptance criteria".
"""

import functools
import time

import numpy as np
import pytest

from conftest import make_context, record_criterion
from oracles import brute_force_argmin
from mvprune.analytics import (
    SearchStats,
    bd_rate,
    complexity,
    complexity_reduction,
    rate_heatmap_correlation,
)
from mvprune.cli import main
from mvprune.frame_io import BlockGeometry, PaddedReference, write_y4m
from mvprune.harness import ExperimentConfig, run_sequence
from mvprune.motion_core import lambda_from_qp, predict_mv
from mvprune.rate_model import UNBOUNDED, admitted_region, rate_surface
from mvprune.search import (
    SearchContext,
    TzsConfig,
    full_search,
    octagonal_axis_raster,
    tzs_search,
    with_rate_elimination,
)
from mvprune.synth import make_clip

CIF = (352, 288)
THRESHOLDS = [2, 3, 4, 5, 6, 8, 10, 12, 14, 16, 20, UNBOUNDED]


def _check(number, title, passed, detail=""):
    record_criterion(number, title, bool(passed), detail)
    assert passed, f"criterion {number} failed: {detail}"


# shared corpus: >= 1000 random 16x16 contexts with windows <= 33x33 ----------

@functools.lru_cache(maxsize=None)
def corpus(n=1000, seed=2021):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        h, w = 48, 48
        cur = rng.integers(0, 256, (h, w), dtype=np.uint8)
        mode = rng.integers(0, 3)
        if mode == 0:
            ref = rng.integers(0, 256, (h, w), dtype=np.uint8)
        else:
            shift = tuple(int(v) for v in rng.integers(-5, 6, size=2))
            noise = rng.integers(-6 * mode, 6 * mode + 1, (h, w))
            ref = np.clip(np.roll(cur, shift, (0, 1)).astype(int) + noise, 0, 255).astype(np.uint8)
        ox, oy = (int(v) for v in rng.integers(0, w - 16 + 1, size=2))
        search_range = int(rng.integers(1, 17))
        lam = int(rng.integers(0, 4 * 256)) / 256
        mvp = tuple(int(v) for v in rng.integers(-4, 5, size=2))
        t = THRESHOLDS[int(rng.integers(0, len(THRESHOLDS)))]
        margin = int(rng.integers(0, 9))
        ctx = make_context(cur, ref, (ox, oy, 16, 16), search_range=search_range,
                           lambda_=lam, mvp=mvp, margin=margin)
        cases.append((cur, ref, (ox, oy), ctx, lam, t, margin))
    return cases


def test_criterion_01_rate_region_geometry():
    t0 = time.perf_counter()
    cross = {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}
    ok = True
    for r in range(1, 65):
        mask = admitted_region(r, 4)
        cells = {(x - r, y - r) for y, x in zip(*np.nonzero(mask))}
        ok &= cells == cross
    r = 64
    m10 = admitted_region(r, 10)
    axis = [k for k in range(-r, r + 1) if m10[r, k + r]]
    diag = [k for k in range(r + 1) if m10[r + k, r + k]]
    ok &= (min(axis), max(axis)) == (-15, 15)
    ok &= [k for k in range(-r, r + 1) if m10[k + r, r]] == axis
    ok &= max(diag) == 3
    cells10 = {(x - r, y - r) for y, x in zip(*np.nonzero(m10))}
    ok &= max(min(abs(x), abs(y)) for x, y in cells10) == 3
    ms = (time.perf_counter() - t0) * 1e3
    _check(1, "rate-region geometry (t=4 cross, t=10 axis +-15, diagonal (3,3))", ok,
           f"{ms:.0f} ms")


def test_criterion_02_constrained_oracle():
    t0 = time.perf_counter()
    cases = corpus()
    mismatches = 0
    for cur, ref, origin, ctx, lam, t, margin in cases:
        res = with_rate_elimination(full_search, t)(ctx)
        mv, cost, d, r, admitted = brute_force_argmin(
            cur, ref, origin, (16, 16), ctx.mvp, ctx.window.range, lam, t, margin)
        if (res.best_mv, res.best_cost.exact_total, res.evaluated) != (mv, cost, admitted):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    _check(2, "decorated full search == brute-force argmin over admitted set",
           mismatches == 0 and len(cases) >= 1000 and elapsed < 60,
           f"{len(cases)} contexts, {mismatches} mismatches, {elapsed:.1f} s")


def test_criterion_03_soundness_and_conservation():
    t0 = time.perf_counter()
    cases = corpus()
    bad_sound = bad_count = bad_conserve = 0
    cfg = TzsConfig()
    patterns = {
        "full": full_search,
        "tzs": tzs_search,
        "tzs_octagonal": functools.partial(tzs_search, cfg=TzsConfig(raster="octagonal")),
        "octagonal": octagonal_axis_raster,
    }
    for _, _, _, ctx, _, t, _ in cases:
        if t < 2:
            continue
        for name, pattern in patterns.items():
            res = with_rate_elimination(pattern, t)(ctx, record_trace=True)
            bad_sound += sum(1 for e in res.trace if e.evaluated and e.rate_bits > t)
            bad_count += res.evaluated + res.skipped_by_rate != len(res.trace)
            if name in ("full", "octagonal"):
                plain = pattern(ctx)
                bad_conserve += res.evaluated + res.skipped_by_rate != plain.evaluated
    elapsed = time.perf_counter() - t0
    ok = bad_sound == 0 and bad_count == 0 and bad_conserve == 0 and elapsed < 60
    _check(3, "elimination soundness and counter conservation", ok,
           f"violations: rate {bad_sound}, trace {bad_count}, conservation {bad_conserve}; "
           f"{elapsed:.1f} s")


def _clip_contexts(frames, search_range=64, qp=32, sizes=((16, 16), (8, 8))):
    """Contexts for every block of every frame pair, MVPs from undecorated TZS."""
    lam = lambda_from_qp(qp)
    for k in range(1, len(frames)):
        cur, padded = frames[k], PaddedReference(frames[k - 1], 16)
        for w, h in sizes:
            mvs = {}
            for by in range(cur.height // h):
                for bx in range(cur.width // w):
                    nb = {"left": mvs.get((bx - 1, by)), "above": mvs.get((bx, by - 1)),
                          "above_right": mvs.get((bx + 1, by - 1))}
                    ctx = SearchContext.build(
                        cur, padded, BlockGeometry(bx * w, by * h, w, h),
                        search_range=search_range, lambda_=lam,
                        mvp=predict_mv([nb["left"], nb["above"], nb["above_right"]]),
                        margin=16, neighbors=nb)
                    res = tzs_search(ctx)
                    mvs[(bx, by)] = res.best_mv
                    yield ctx, res


def test_criterion_04_unbounded_identity():
    diffs = 0
    n = 0
    for kind in ("static", "translation", "noise"):
        frames = make_clip(kind, *CIF, frames=2, seed=0)
        for ctx, plain in _clip_contexts(frames):
            a = tzs_search(ctx, record_trace=True)
            b = with_rate_elimination(tzs_search, UNBOUNDED)(ctx, record_trace=True)
            diffs += a != b or a.best_mv != plain.best_mv
            n += 1
    _check(4, "unbounded-threshold TZS identical to undecorated TZS", diffs == 0,
           f"{n} blocks, {diffs} differences")


def test_criterion_05_complexity_arithmetic():
    s = SearchStats()
    s.add((16, 16), 10)
    s.add((8, 8), 4)
    c = complexity(s)
    dc = complexity_reduction(1000, 200)
    _check(5, "complexity arithmetic", c == 2816 and dc == 80.0, f"C={c}, dC={dc}%")


def test_criterion_06_desk_scale_delta_c():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(inputs=("synthetic",), block_sizes=((16, 16), (8, 8)),
                           search_range=64, pattern="tzs", qps=(32,))
    details = []
    ok = True
    for kind in ("static", "translation", "noise"):
        frames = make_clip(kind, *CIF, frames=3, seed=0)
        c = {t: run_sequence(frames, cfg, name=kind, threshold=t)[0].complexity
             for t in (4, 10, 20, UNBOUNDED)}
        dc = [complexity_reduction(c[UNBOUNDED], c[t]) for t in (4, 10, 20, UNBOUNDED)]
        ok &= dc[0] >= 50.0
        ok &= all(b <= a for a, b in zip(dc, dc[1:]))
        details.append(f"{kind}: " + "/".join(f"{v:.1f}" for v in dc))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    _check(6, "desk-scale dC(t=4) >= 50% and monotone in t", ok,
           "; ".join(details) + f"; {elapsed:.0f} s")


def test_criterion_07_correlation():
    frames = make_clip("translation", *CIF, frames=10, seed=0)
    cfg = ExperimentConfig(inputs=("translation",), block_sizes=((16, 16), (8, 8)),
                           search_range=64, pattern="tzs", qps=(22, 27, 32, 37),
                           heatmap_radius=8)
    runs = run_sequence(frames, cfg, threads=4)
    heat = functools.reduce(lambda a, b: a.merge(b), [s.heatmap for s in runs])
    r_clip = rate_heatmap_correlation(heat, rate_surface(heat.radius))
    surface = rate_surface(8)
    r_exact = rate_heatmap_correlation(np.exp(-surface.astype(float)), surface,
                                       zero_policy="exclude")
    ok = r_clip <= -0.5 and abs(r_exact + 1.0) <= 1e-9
    _check(7, "rate/heatmap correlation", ok,
           f"translational clip r={r_clip:.3f}, exp(-rate) r={r_exact:.12f}")


def test_criterion_08_bd_rate():
    anchor = [(100.0, 30.0), (180.0, 32.6), (330.0, 35.1), (600.0, 37.2)]
    same = bd_rate(anchor, anchor)
    up = bd_rate(anchor, [(r * 1.10, q) for r, q in anchor])
    test = [(r * f, q) for (r, q), f in zip(anchor, (1.03, 1.01, 1.025, 1.02))]
    anti = bd_rate(anchor, test) + bd_rate(test, anchor)
    ok = same == 0.0 and abs(up - 10.0) <= 0.01 and abs(anti) <= 0.1
    _check(8, "BD-rate calculator", ok,
           f"identity={same}, 1.10x={up:.6f}, antisymmetry residual={anti:.4f}")


def test_criterion_09_cost_tradeoff():
    violations = 0
    equal_cases = 0
    for _, _, _, ctx, _, t, _ in corpus():
        free = full_search(ctx)
        bounded = with_rate_elimination(full_search, t)(ctx)
        if bounded.best_cost.scaled < free.best_cost.scaled:
            violations += 1
        if free.best_cost.rate_bits <= t:
            equal_cases += 1
            if bounded.best_cost != free.best_cost or bounded.best_mv != free.best_mv:
                violations += 1
    _check(9, "best_cost(t) >= best_cost(unbounded), equal when optimum admitted",
           violations == 0, f"{violations} violations, {equal_cases} admitted-optimum cases")


@pytest.mark.parametrize("dummy", [None])
def test_criterion_10_determinism(tmp_path, dummy):
    clip = tmp_path / "translation.y4m"
    with open(clip, "wb") as fh:
        write_y4m(make_clip("translation", *CIF, frames=3, seed=0), fh)
    outs = []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        rc = main(["run", "--input", str(clip), "--threshold", "10", "--qp", "27,37",
                   "--range", "32", "--block-sizes", "16x16,8x8", "--threads", str(threads),
                   "--out", str(out), "--no-figures"])
        assert rc == 0
        outs.append(out)
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
               for n in ("report.csv", "blocks.csv"))
    _check(10, "--threads 1 vs 8 byte-identical CSV reports", same)
