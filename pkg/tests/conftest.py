import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mvprune.frame_io import BlockGeometry, LumaFrame, PaddedReference  # noqa: E402
from mvprune.search import SearchContext  # noqa: E402


def make_context(cur, ref, geom, *, search_range=8, lambda_=4, mvp=(0, 0),
                 threshold=float("inf"), margin=0, neighbors=None):
    if not isinstance(cur, LumaFrame):
        cur = LumaFrame(cur)
    if not isinstance(ref, (LumaFrame, PaddedReference)):
        ref = LumaFrame(ref)
    return SearchContext.build(
        cur, ref, BlockGeometry(*geom), search_range=search_range, lambda_=lambda_,
        mvp=mvp, threshold=threshold, margin=margin, neighbors=neighbors,
    )


@pytest.fixture
def textured():
    from mvprune.synth import textured_canvas

    return np.rint(textured_canvas(96, 96, np.random.default_rng(11))).astype(np.uint8)


# acceptance criteria report -------------------------------------------------

_CRITERIA = {}


def record_criterion(number, title, passed, detail=""):
    _CRITERIA[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[n]
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {n:2d}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
