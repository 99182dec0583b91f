"""
Luma-only readers for YUV4MPEG2 and headerless planar 4:2:0 streams, plus
block sampling with edge-replicated reference padding.
"""

from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, NamedTuple

import numpy as np

__all__ = [
    "FrameFormatError",
    "LumaFrame",
    "BlockGeometry",
    "read_y4m",
    "read_raw_yuv",
    "write_y4m",
    "write_raw_yuv",
    "extract_block",
    "sample_candidate",
    "PaddedReference",
    "load_frames",
]

_Y4M_MAGIC = b"YUV4MPEG2"
# 4:2:0 variants that differ only in chroma siting.
_C420_TAGS = {"420", "420jpeg", "420paldv", "420mpeg2"}


class FrameFormatError(ValueError):
    """Malformed or unsupported raw video input."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True, eq=False)
class LumaFrame:
    """One 8-bit luma plane, stored as a read-only ``(height, width)`` array."""

    samples: np.ndarray
    frame_index: int = 0
    width: int = field(init=False)
    height: int = field(init=False)

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValueError(f"luma plane must be 2-D and non-empty, got {samples.shape}")
        if samples.dtype != np.uint8:
            if samples.min() < 0 or samples.max() > 255:
                raise ValueError("luma samples must be 8-bit")
            samples = samples.astype(np.uint8)
        elif samples.flags.writeable:
            samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "height", samples.shape[0])
        object.__setattr__(self, "width", samples.shape[1])

    def __eq__(self, other):
        if not isinstance(other, LumaFrame):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


class BlockGeometry(NamedTuple):
    origin_x: int
    origin_y: int
    width: int
    height: int

    def fits(self, frame: LumaFrame) -> bool:
        return (
            self.width >= 1
            and self.height >= 1
            and 0 <= self.origin_x
            and 0 <= self.origin_y
            and self.origin_x + self.width <= frame.width
            and self.origin_y + self.height <= frame.height
        )


def _parse_y4m_header(line: bytes, offset: int):
    tokens = line.split(b" ")
    if tokens[0] != _Y4M_MAGIC:
        raise FrameFormatError("missing YUV4MPEG2 signature", offset)
    width = height = None
    colorspace = "420jpeg"
    for tok in tokens[1:]:
        if not tok:
            continue
        tag, value = chr(tok[0]), tok[1:].decode("ascii", "replace")
        if tag == "W":
            width = _header_int(value, "width", offset)
        elif tag == "H":
            height = _header_int(value, "height", offset)
        elif tag == "C":
            colorspace = value
    if width is None or height is None:
        raise FrameFormatError("header lacks W or H tag", offset)
    if colorspace not in _C420_TAGS:
        raise FrameFormatError(f"unsupported colorspace C{colorspace}", offset)
    return width, height


def _header_int(value, name, offset):
    try:
        v = int(value)
    except ValueError:
        raise FrameFormatError(f"invalid {name} {value!r}", offset) from None
    if v < 1:
        raise FrameFormatError(f"{name} must be positive", offset)
    return v


def _read_line(stream, offset, limit=4096):
    line = stream.readline(limit)
    if line and not line.endswith(b"\n"):
        raise FrameFormatError("unterminated header line", offset)
    return line


def read_y4m(stream: BinaryIO) -> Iterator[LumaFrame]:
    """Yield the luma planes of a 4:2:0 YUV4MPEG2 stream in display order."""
    offset = 0
    header = _read_line(stream, offset)
    if not header:
        raise FrameFormatError("empty stream", offset)
    width, height = _parse_y4m_header(header.rstrip(b"\n"), offset)
    offset += len(header)
    luma_size = width * height
    chroma_size = 2 * ((width + 1) // 2) * ((height + 1) // 2)
    index = 0
    while True:
        marker = _read_line(stream, offset)
        if not marker:
            return
        if not marker.startswith(b"FRAME"):
            raise FrameFormatError("expected FRAME marker", offset)
        offset += len(marker)
        payload = stream.read(luma_size + chroma_size)
        if len(payload) != luma_size + chroma_size:
            raise FrameFormatError(
                f"truncated frame {index}: expected {luma_size + chroma_size} "
                f"bytes, got {len(payload)}",
                offset,
            )
        plane = np.frombuffer(payload, dtype=np.uint8, count=luma_size)
        yield LumaFrame(plane.reshape(height, width), index)
        offset += len(payload)
        index += 1


def read_raw_yuv(stream: BinaryIO, width: int, height: int) -> Iterator[LumaFrame]:
    """Yield luma planes from headerless planar 4:2:0 data."""
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    luma_size = width * height
    frame_size = luma_size + 2 * ((width + 1) // 2) * ((height + 1) // 2)
    offset = 0
    index = 0
    while True:
        payload = stream.read(frame_size)
        if not payload:
            return
        if len(payload) != frame_size:
            raise FrameFormatError(
                f"stream size is not a multiple of the {frame_size}-byte frame "
                f"size ({len(payload)} trailing bytes)",
                offset,
            )
        plane = np.frombuffer(payload, dtype=np.uint8, count=luma_size)
        yield LumaFrame(plane.reshape(height, width), index)
        offset += frame_size
        index += 1


def _zero_chroma(frame):
    return bytes(2 * ((frame.width + 1) // 2) * ((frame.height + 1) // 2))


def write_raw_yuv(frames, stream: BinaryIO):
    """Write luma planes as planar 4:2:0 with zero-filled chroma."""
    for frame in frames:
        stream.write(frame.samples.tobytes())
        stream.write(_zero_chroma(frame))


def write_y4m(frames, stream: BinaryIO, fps="25:1"):
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to write")
    w, h = frames[0].width, frames[0].height
    stream.write(f"YUV4MPEG2 W{w} H{h} F{fps} Ip A1:1 C420jpeg\n".encode("ascii"))
    for frame in frames:
        if (frame.width, frame.height) != (w, h):
            raise ValueError("all frames must share dimensions")
        stream.write(b"FRAME\n")
        stream.write(frame.samples.tobytes())
        # neutral grey chroma keeps the clip viewable
        stream.write(b"\x80" * len(_zero_chroma(frame)))


def load_frames(path, width=None, height=None, limit=None):
    """Read a ``.y4m`` file, or raw 4:2:0 when ``width``/``height`` are given."""
    frames = []
    with open(path, "rb") as fh:
        if width is not None or height is not None:
            if width is None or height is None:
                raise ValueError("raw input needs both width and height")
            source = read_raw_yuv(fh, width, height)
        else:
            source = read_y4m(fh)
        for frame in source:
            if limit is not None and len(frames) >= limit:
                break
            frames.append(frame)
    return frames


def extract_block(frame: LumaFrame, geom: BlockGeometry) -> np.ndarray:
    if not geom.fits(frame):
        raise ValueError(f"block {tuple(geom)} outside {frame.width}x{frame.height} frame")
    x, y = geom.origin_x, geom.origin_y
    return frame.samples[y : y + geom.height, x : x + geom.width]


def sample_candidate(reference: LumaFrame, geom: BlockGeometry, mv) -> np.ndarray:
    """
    Sample the block displaced by ``mv``; coordinates outside the frame
    replicate the nearest border pel.
    """
    x0 = geom.origin_x + mv[0]
    y0 = geom.origin_y + mv[1]
    cols = np.clip(np.arange(x0, x0 + geom.width), 0, reference.width - 1)
    rows = np.clip(np.arange(y0, y0 + geom.height), 0, reference.height - 1)
    return reference.samples[np.ix_(rows, cols)]


class PaddedReference:
    """
    Reference plane with ``margin`` pels of edge replication on every side.

    Slicing it gives the same samples as :func:`sample_candidate` without
    per-candidate index arithmetic; candidates reaching past the margin fall
    back to clamped sampling. Samples are widened to int32 once.
    """

    def __init__(self, reference: LumaFrame, margin: int):
        self.frame = reference
        self.margin = int(margin)
        self.plane = np.pad(
            reference.samples.astype(np.int32), self.margin, mode="edge"
        )

    def block(self, geom: BlockGeometry, mv) -> np.ndarray:
        x = geom.origin_x + mv[0] + self.margin
        y = geom.origin_y + mv[1] + self.margin
        if (
            x < 0
            or y < 0
            or x + geom.width > self.plane.shape[1]
            or y + geom.height > self.plane.shape[0]
        ):
            return sample_candidate(self.frame, geom, mv).astype(np.int32)
        return self.plane[y : y + geom.height, x : x + geom.width]
