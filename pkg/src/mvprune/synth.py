"""Deterministic synthetic test clips."""

import numpy as np

from mvprune.frame_io import LumaFrame

__all__ = ["CLIP_KINDS", "make_clip", "textured_canvas"]

CLIP_KINDS = ("static", "translation", "noise")


def _box_blur(img, k):
    # separable running mean via cumulative sums, wrap-around edges
    out = img
    for axis in (0, 1):
        pad = np.concatenate([out.take(range(-k, 0), axis=axis), out,
                              out.take(range(0, k), axis=axis)], axis=axis)
        c = np.cumsum(pad, axis=axis, dtype=np.float64)
        c = np.insert(c, 0, 0.0, axis=axis)
        n = out.shape[axis]
        hi = c.take(range(2 * k + 1, 2 * k + 1 + n), axis=axis)
        lo = c.take(range(0, n), axis=axis)
        out = (hi - lo) / (2 * k + 1)
    return out


def textured_canvas(height, width, rng):
    """Multi-scale blurred noise stretched to the 8-bit range."""
    img = np.zeros((height, width))
    for k, weight in ((8, 1.0), (3, 0.6), (1, 0.3)):
        img += weight * _box_blur(rng.standard_normal((height, width)), k) * (2 * k + 1)
    img -= img.min()
    img *= 235.0 / max(img.max(), 1e-9)
    return img + 10.0


def _bilinear_crop(canvas, x, y, height, width):
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    fx, fy = x - x0, y - y0
    a = canvas[y0 : y0 + height + 1, x0 : x0 + width + 1]
    top = a[:-1, :-1] * (1 - fx) + a[:-1, 1:] * fx
    bottom = a[1:, :-1] * (1 - fx) + a[1:, 1:] * fx
    return top * (1 - fy) + bottom * fy


def make_clip(kind, width=352, height=288, frames=3, seed=0, max_shift=6,
              noise_sigma=2.0, subpel=True):
    """
    Build a clip of ``frames`` luma planes.

    ``static`` repeats one textured plane; ``translation`` moves a textured
    canvas by a random step in ``[-max_shift, max_shift]**2`` per frame
    (fractional and bilinearly resampled unless ``subpel`` is false) and adds
    mild sensor noise; ``noise`` is independent uniform noise per frame.
    """
    rng = np.random.default_rng(seed)
    if kind == "static":
        plane = np.rint(textured_canvas(height, width, rng)).astype(np.uint8)
        return [LumaFrame(plane, i) for i in range(frames)]
    if kind == "noise":
        return [
            LumaFrame(rng.integers(0, 256, (height, width), dtype=np.uint8), i)
            for i in range(frames)
        ]
    if kind == "translation":
        pad = max_shift * frames + 1
        canvas = textured_canvas(height + 2 * pad, width + 2 * pad, rng)
        x = y = float(pad)
        out = []
        for i in range(frames):
            if i:
                if subpel:
                    step = rng.uniform(-max_shift, max_shift, size=2)
                else:
                    step = rng.integers(-max_shift, max_shift + 1, size=2)
                x -= float(step[0])
                y -= float(step[1])
            crop = _bilinear_crop(canvas, x, y, height, width)
            noisy = crop + rng.normal(0.0, noise_sigma, crop.shape)
            out.append(LumaFrame(np.clip(np.rint(noisy), 0, 255).astype(np.uint8), i))
        return out
    raise ValueError(f"unknown clip kind {kind!r}; expected one of {CLIP_KINDS}")
