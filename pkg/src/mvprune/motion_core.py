"""Distortion, Lagrangian cost and MV prediction."""

import math
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from mvprune.rate_model import RateTable

__all__ = [
    "MotionVector",
    "CostModel",
    "Cost",
    "LAMBDA_SCALE",
    "sad",
    "lagrangian_cost",
    "lambda_from_qp",
    "predict_mv",
]

#: Lambda is held as an integer multiple of 1/LAMBDA_SCALE.
LAMBDA_SCALE = 256


class MotionVector(NamedTuple):
    x: int
    y: int

    def __add__(self, other):
        return MotionVector(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return MotionVector(self.x - other[0], self.y - other[1])

    def __neg__(self):
        return MotionVector(-self.x, -self.y)


ZERO_MV = MotionVector(0, 0)


def sad(a, b) -> int:
    """Sum of absolute differences between two equally sized blocks."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"block shapes differ: {a.shape} vs {b.shape}")
    # int64 holds 128*128*255 with room to spare
    return int(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum())


class Cost(NamedTuple):
    """Cost of one candidate; ``scaled`` is ``total * LAMBDA_SCALE`` exactly."""

    scaled: int
    distortion: int
    rate_bits: int

    @property
    def total(self) -> float:
        return self.scaled / LAMBDA_SCALE

    @property
    def exact_total(self) -> Fraction:
        return Fraction(self.scaled, LAMBDA_SCALE)


class CostModel:
    """Lagrangian weighting of MVD bits against distortion."""

    __slots__ = ("lambda_scaled", "rate_table", "mvp")

    def __init__(self, lambda_, rate_table: RateTable, mvp=ZERO_MV):
        if lambda_ < 0:
            raise ValueError("lambda must be non-negative")
        self.lambda_scaled = int(round(Fraction(lambda_) * LAMBDA_SCALE))
        self.rate_table = rate_table
        self.mvp = MotionVector(*mvp)

    @property
    def lambda_(self) -> Fraction:
        return Fraction(self.lambda_scaled, LAMBDA_SCALE)

    def with_mvp(self, mvp) -> "CostModel":
        model = CostModel.__new__(CostModel)
        model.lambda_scaled = self.lambda_scaled
        model.rate_table = self.rate_table
        model.mvp = MotionVector(*mvp)
        return model

    def rate(self, mv) -> int:
        return self.rate_table.mvd_rate(mv[0] - self.mvp.x, mv[1] - self.mvp.y)

    def __repr__(self):
        return (
            f"CostModel(lambda={float(self.lambda_):g}, mvp={tuple(self.mvp)}, "
            f"{self.rate_table!r})"
        )


def lagrangian_cost(model: CostModel, mv, d: int) -> Cost:
    r = model.rate(mv)
    return Cost(d * LAMBDA_SCALE + model.lambda_scaled * r, d, r)


def lambda_from_qp(qp: int) -> float:
    """Motion estimation lambda for a QP: ``sqrt(0.85 * 2**((qp - 12) / 3))``."""
    if not 0 <= qp <= 51 or int(qp) != qp:
        raise ValueError(f"qp must be an integer in [0, 51], got {qp}")
    return math.sqrt(0.85 * 2.0 ** ((qp - 12) / 3.0))


def _median3(a, b, c):
    return max(min(a, b), min(max(a, b), c))


def predict_mv(neighbors: Sequence[Optional[MotionVector]]) -> MotionVector:
    """
    Component-wise median of the available neighbour MVs (left, above,
    above-right). A lone neighbour is used as is; with two, the missing
    one counts as zero; with none the predictor is zero.
    """
    avail = [MotionVector(*n) for n in neighbors if n is not None]
    if not avail:
        return ZERO_MV
    if len(avail) == 1:
        return avail[0]
    if len(avail) == 2:
        avail.append(ZERO_MV)
    if len(avail) == 3:
        a, b, c = avail
        return MotionVector(_median3(a.x, b.x, c.x), _median3(a.y, b.y, c.y))
    xs = sorted(v.x for v in avail)
    ys = sorted(v.y for v in avail)
    mid = (len(avail) - 1) // 2
    return MotionVector(xs[mid], ys[mid])
