"""Integer motion estimation with rate-based candidate elimination."""

from mvprune.rate_model import (
    UNBOUNDED,
    RateTable,
    golomb_signed_length,
    mvd_rate,
    rate_surface,
    within_budget,
)
from mvprune.motion_core import (
    Cost,
    CostModel,
    MotionVector,
    lagrangian_cost,
    lambda_from_qp,
    predict_mv,
    sad,
)
from mvprune.search import (
    SearchContext,
    SearchResult,
    SearchWindow,
    TzsConfig,
    diamond_points,
    full_search,
    octagonal_axis_raster,
    raster_points,
    tzs_search,
    with_rate_elimination,
)

__version__ = "0.1.0"

__all__ = [
    "UNBOUNDED",
    "RateTable",
    "golomb_signed_length",
    "mvd_rate",
    "rate_surface",
    "within_budget",
    "Cost",
    "CostModel",
    "MotionVector",
    "lagrangian_cost",
    "lambda_from_qp",
    "predict_mv",
    "sad",
    "SearchContext",
    "SearchResult",
    "SearchWindow",
    "TzsConfig",
    "diamond_points",
    "full_search",
    "octagonal_axis_raster",
    "raster_points",
    "tzs_search",
    "with_rate_elimination",
]
