"""
Motion vector difference bit-length model.

MVD components are priced with the length of their signed order-0
Exp-Golomb codeword. The model is content independent, so lengths are
served from a precomputed table whose bound follows the search range.
"""

import math
from typing import Union

import numpy as np

__all__ = [
    "UNBOUNDED",
    "RateTable",
    "golomb_signed_length",
    "mvd_rate",
    "within_budget",
    "rate_surface",
    "admitted_region",
    "parse_threshold",
    "format_threshold",
]

#: Threshold that admits every candidate.
UNBOUNDED = math.inf

Threshold = Union[int, float]


def _code_num(v):
    # signed -> unsigned interleave: 0, 1, -1, 2, -2, ...
    return 2 * v - 1 if v > 0 else -2 * v


def golomb_signed_length(v):
    """Bit length of the signed Exp-Golomb codeword for integer ``v``."""
    return 2 * ((_code_num(v) + 1).bit_length() - 1) + 1


class RateTable:
    """
    Lookup table of signed Exp-Golomb lengths for ``|v| <= max_magnitude``.

    The length only depends on the magnitude of ``v``, so a single array
    indexed by ``abs(v)`` covers both signs.
    """

    __slots__ = ("max_magnitude", "lengths")

    def __init__(self, max_magnitude: int):
        if max_magnitude < 0:
            raise ValueError("max_magnitude must be non-negative")
        self.max_magnitude = int(max_magnitude)
        lengths = np.array(
            [golomb_signed_length(v) for v in range(self.max_magnitude + 1)],
            dtype=np.int64,
        )
        lengths.setflags(write=False)
        self.lengths = lengths

    @classmethod
    def for_search_range(cls, search_range: int) -> "RateTable":
        return cls(2 * search_range)

    def __repr__(self):
        return f"RateTable(max_magnitude={self.max_magnitude})"

    def length(self, v: int) -> int:
        m = abs(v)
        if m > self.max_magnitude:
            raise IndexError(
                f"|{v}| exceeds rate table bound {self.max_magnitude}"
            )
        return int(self.lengths[m])

    def mvd_rate(self, dx: int, dy: int) -> int:
        return self.length(dx) + self.length(dy)


def mvd_rate(mvd, table: RateTable = None) -> int:
    """
    Estimated bits for an MV difference ``(dx, dy)``.

    Without a table the closed form is used and any magnitude is accepted.
    """
    dx, dy = mvd
    if table is None:
        return golomb_signed_length(dx) + golomb_signed_length(dy)
    return table.mvd_rate(dx, dy)


def within_budget(mv, mvp, t: Threshold, table: RateTable = None) -> bool:
    """True when the rate of ``mv - mvp`` does not exceed ``t``."""
    if t == UNBOUNDED:
        return True
    return mvd_rate((mv[0] - mvp[0], mv[1] - mvp[1]), table) <= t


def rate_surface(radius: int) -> np.ndarray:
    """
    Rate of every MVD in a ``(2*radius+1)**2`` grid.

    ``grid[dy + radius, dx + radius]`` is the rate of ``(dx, dy)``.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    g = np.array(
        [golomb_signed_length(v) for v in range(-radius, radius + 1)],
        dtype=np.int64,
    )
    return g[:, None] + g[None, :]


def admitted_region(radius: int, t: Threshold) -> np.ndarray:
    """Boolean mask of the MVDs a threshold admits inside ``radius``."""
    surface = rate_surface(radius)
    if t == UNBOUNDED:
        return np.ones_like(surface, dtype=bool)
    return surface <= t


def parse_threshold(text) -> Threshold:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        if text == UNBOUNDED:
            return UNBOUNDED
        if text != int(text) or text < 0:
            raise ValueError(f"threshold must be a non-negative integer: {text!r}")
        return int(text)
    s = str(text).strip().lower()
    if s in ("unbounded", "inf", "none", "off"):
        return UNBOUNDED
    try:
        value = int(s)
    except ValueError:
        raise ValueError(f"invalid threshold {text!r}") from None
    if value < 0:
        raise ValueError(f"threshold must be non-negative: {value}")
    return value


def format_threshold(t: Threshold) -> str:
    return "unbounded" if t == UNBOUNDED else str(int(t))
