"""Saliency heatmaps: normalization, background suppression, and the SMAP codec.

A saliency map is a 2-D float grid indexed ``[row, col]``. Maps travel between
tools as SMAP files: the ASCII magic ``SMAP``, then version, width and height
as unsigned 32-bit little-endian integers, then ``width * height`` IEEE-754
32-bit little-endian floats in row-major order. The header is 16 bytes, so a
w x h file is exactly ``16 + 4 * w * h`` bytes long.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .validation import check_map_pair, check_saliency_map, check_unit_range

SMAP_MAGIC = b"SMAP"
SMAP_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class SuppressionParams:
    """Settings for gated background subtraction.

    delta gates on the background map's intensity: cells at or below it get a
    plain difference, cells above it get the difference scaled by epsilon.
    With clamp_nonnegative, negative differences are floored at zero.
    """

    delta: float = 0.6
    epsilon: float = 2.0
    clamp_nonnegative: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.delta) and 0.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValueError(f"epsilon must be finite and > 0, got {self.epsilon}")


def normalize_map(values) -> np.ndarray:
    """Min-max rescale a map to [0, 1]; a constant map collapses to all zeros."""
    sal = check_saliency_map(values)
    lo = sal.min()
    hi = sal.max()
    if hi == lo:
        return np.zeros_like(sal)
    return (sal - lo) / (hi - lo)


def suppress_background(sa_ori, sa_back, params: SuppressionParams | None = None) -> np.ndarray:
    """Subtract background saliency, amplifying wherever the background is hot.

    Per cell: ``ori - back`` when ``back <= delta``, else
    ``epsilon * (ori - back)``. Both inputs must already lie in [0, 1] and
    share one shape. The result is not renormalized; callers that need a
    [0, 1] map can run :func:`normalize_map` on it.
    """
    if params is None:
        params = SuppressionParams()
    ori, back = check_map_pair(sa_ori, sa_back)
    check_unit_range(ori, "sa_ori")
    check_unit_range(back, "sa_back")
    diff = ori - back
    out = np.where(back <= params.delta, diff, params.epsilon * diff)
    if params.clamp_nonnegative:
        out = np.maximum(out, 0.0)
    return out


def subtract_naive(sa_ori, sa_back, clamp_nonnegative: bool = True) -> np.ndarray:
    """Plain per-cell difference of two maps, the baseline the harness compares against."""
    ori, back = check_map_pair(sa_ori, sa_back)
    check_unit_range(ori, "sa_ori")
    check_unit_range(back, "sa_back")
    out = ori - back
    if clamp_nonnegative:
        out = np.maximum(out, 0.0)
    return out


def encode_smap(values) -> bytes:
    """Serialize a map to SMAP bytes. Cells are stored as float32."""
    sal = check_saliency_map(values)
    height, width = sal.shape
    payload = np.ascontiguousarray(sal, dtype="<f4").tobytes()
    return _HEADER.pack(SMAP_MAGIC, SMAP_VERSION, width, height) + payload


def decode_smap(data: bytes) -> np.ndarray:
    """Parse SMAP bytes into a float32 (height, width) array."""
    if len(data) < _HEADER.size:
        raise FormatError(
            f"SMAP header needs {_HEADER.size} bytes, got {len(data)}"
        )
    magic, version, width, height = _HEADER.unpack_from(data)
    if magic != SMAP_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {SMAP_MAGIC!r}")
    if version != SMAP_VERSION:
        raise FormatError(f"unsupported SMAP version {version}")
    if width == 0 or height == 0:
        raise FormatError(f"invalid SMAP dimensions {width}x{height}")
    expected = _HEADER.size + 4 * width * height
    if len(data) != expected:
        raise FormatError(
            f"SMAP length mismatch for {width}x{height} map: "
            f"expected {expected} bytes, got {len(data)}"
        )
    cells = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if not np.isfinite(cells).all():
        idx = int(np.argwhere(~np.isfinite(cells))[0][0])
        raise FormatError(
            f"SMAP cell {idx} (row={idx // width}, col={idx % width}) is non-finite"
        )
    return cells.reshape(height, width).copy()


def read_smap(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_smap(fh.read())


def write_smap(path, values) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_smap(values))


def map_to_text(values) -> str:
    """Plain-text form for debugging: 'width height' then one line per row."""
    sal = np.asarray(values)
    if sal.ndim != 2 or sal.size == 0:
        raise ValueError(f"saliency map must be a non-empty 2-D grid, got shape {sal.shape}")
    lines = [f"{sal.shape[1]} {sal.shape[0]}"]
    for row in sal:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def map_from_text(text: str) -> np.ndarray:
    """Inverse of :func:`map_to_text`. Returns a float32 array (the SMAP cell type)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty saliency-map text")
    head = lines[0].split()
    if len(head) != 2:
        raise FormatError("first line must be 'width height'")
    try:
        width, height = int(head[0]), int(head[1])
    except ValueError as exc:
        raise FormatError(f"bad dimensions line {lines[0]!r}") from exc
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if len(lines) - 1 != height:
        raise FormatError(f"expected {height} rows, got {len(lines) - 1}")
    rows = []
    for i, line in enumerate(lines[1:], 1):
        cells = line.split()
        if len(cells) != width:
            raise FormatError(f"row {i} has {len(cells)} cells, expected {width}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FormatError(f"row {i} has a non-numeric cell") from exc
    arr = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise FormatError("saliency-map text contains non-finite cells")
    return arr.astype(np.float32)
