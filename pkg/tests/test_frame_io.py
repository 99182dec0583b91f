import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvprune.frame_io import (
    BlockGeometry,
    FrameFormatError,
    LumaFrame,
    PaddedReference,
    extract_block,
    read_raw_yuv,
    read_y4m,
    sample_candidate,
    write_raw_yuv,
    write_y4m,
)

HEADER = b"YUV4MPEG2 W4 H4 F25:1 C420\n"
FRAME0 = bytes(range(16)) + b"\x80" * 8
FRAME1 = bytes(range(16, 32)) + b"\x80" * 8


def test_y4m_single_frame():
    frames = list(read_y4m(io.BytesIO(HEADER + b"FRAME\n" + FRAME0)))
    assert len(frames) == 1
    f = frames[0]
    assert (f.width, f.height, f.frame_index) == (4, 4, 0)
    assert f.samples.tolist() == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11], [12, 13, 14, 15]]


def test_y4m_two_frames_in_order():
    data = HEADER + b"FRAME\n" + FRAME0 + b"FRAME Ixyz\n" + FRAME1
    frames = list(read_y4m(io.BytesIO(data)))
    assert [f.frame_index for f in frames] == [0, 1]
    assert frames[1].samples[0, 0] == 16


def test_y4m_truncated_payload():
    data = HEADER + b"FRAME\n" + FRAME0[:10]
    with pytest.raises(FrameFormatError) as err:
        list(read_y4m(io.BytesIO(data)))
    assert err.value.offset == len(HEADER) + len(b"FRAME\n")
    assert "truncated" in str(err.value)


@pytest.mark.parametrize(
    "header, word",
    [
        (b"YUV4MPEG2 W4 H4 C444\n", "colorspace"),
        (b"YUV4MPEG2 W4 H4 C420p10\n", "colorspace"),
        (b"YUV4MPEG W4 H4\n", "signature"),
        (b"YUV4MPEG2 W4\n", "W or H"),
        (b"YUV4MPEG2 Wx H4\n", "width"),
    ],
)
def test_y4m_bad_headers(header, word):
    with pytest.raises(FrameFormatError) as err:
        list(read_y4m(io.BytesIO(header + b"FRAME\n" + FRAME0)))
    assert word in str(err.value)
    assert err.value.offset == 0


def test_y4m_bad_frame_marker():
    with pytest.raises(FrameFormatError) as err:
        list(read_y4m(io.BytesIO(HEADER + b"FRAMX\n" + FRAME0)))
    assert err.value.offset == len(HEADER)


@pytest.mark.parametrize("size, count", [(24, 1), (48, 2), (0, 0)])
def test_raw_frame_counts(size, count):
    frames = list(read_raw_yuv(io.BytesIO(bytes(size)), 4, 4))
    assert len(frames) == count


def test_raw_trailing_partial_frame():
    with pytest.raises(FrameFormatError) as err:
        list(read_raw_yuv(io.BytesIO(bytes(25)), 4, 4))
    assert err.value.offset == 24


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 9), st.integers(1, 9), st.integers(1, 3), st.integers(0, 2**32 - 1)
)
def test_raw_round_trip(w, h, n, seed):
    rng = np.random.default_rng(seed)
    frames = [LumaFrame(rng.integers(0, 256, (h, w), dtype=np.uint8), i) for i in range(n)]
    buf = io.BytesIO()
    write_raw_yuv(frames, buf)
    buf.seek(0)
    assert list(read_raw_yuv(buf, w, h)) == frames


def test_y4m_round_trip_odd_size():
    rng = np.random.default_rng(3)
    frames = [LumaFrame(rng.integers(0, 256, (5, 7), dtype=np.uint8), i) for i in range(2)]
    buf = io.BytesIO()
    write_y4m(frames, buf)
    buf.seek(0)
    assert list(read_y4m(buf)) == frames


def test_luma_frame_rejects_bad_planes():
    with pytest.raises(ValueError):
        LumaFrame(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        LumaFrame(np.full((2, 2), 1000))


def _frame4():
    return LumaFrame(np.arange(16, dtype=np.uint8).reshape(4, 4))


def test_extract_block_examples():
    f = _frame4()
    assert np.array_equal(extract_block(f, BlockGeometry(0, 0, 4, 4)), f.samples)
    assert extract_block(f, BlockGeometry(1, 1, 2, 2)).tolist() == [[5, 6], [9, 10]]
    with pytest.raises(ValueError):
        extract_block(f, BlockGeometry(3, 3, 2, 2))


def test_sample_candidate_zero_mv_matches_extract():
    f = _frame4()
    g = BlockGeometry(1, 1, 2, 3)
    assert np.array_equal(sample_candidate(f, g, (0, 0)), extract_block(f, g))


def test_sample_candidate_clamps_left():
    f = _frame4()
    block = sample_candidate(f, BlockGeometry(0, 0, 3, 4), (-10, 0))
    assert np.array_equal(block, np.repeat(f.samples[:, :1], 3, axis=1))


def test_sample_candidate_ramp_shift():
    ramp = LumaFrame(np.tile(np.arange(0, 80, 5, dtype=np.uint8), (8, 1)))
    g = BlockGeometry(4, 2, 4, 4)
    shifted = sample_candidate(ramp, g, (1, 0)).astype(int)
    base = extract_block(ramp, g).astype(int)
    assert np.all(shifted - base == 5)


@given(st.integers(-5, 5), st.integers(-5, 5))
def test_in_bounds_candidate_equals_shifted_extract(dx, dy):
    f = LumaFrame(np.random.default_rng(0).integers(0, 256, (16, 16), dtype=np.uint8))
    g = BlockGeometry(5, 5, 6, 6)
    shifted = BlockGeometry(5 + dx, 5 + dy, 6, 6)
    assert np.array_equal(sample_candidate(f, g, (dx, dy)), extract_block(f, shifted))


@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(0, 12))
def test_padded_reference_matches_clamped_sampling(dx, dy, margin):
    f = LumaFrame(np.random.default_rng(1).integers(0, 256, (12, 10), dtype=np.uint8))
    g = BlockGeometry(2, 3, 4, 8)
    padded = PaddedReference(f, margin)
    assert np.array_equal(padded.block(g, (dx, dy)), sample_candidate(f, g, (dx, dy)))
