"""Region extraction: thresholding, connected components, box selection, overlays.

Coordinates are pixel-discrete with ``(x, y)`` the top-left corner, x growing
rightward (columns) and y downward (rows). Images are ``(height, width, 3)``
uint8 RGB arrays; the mandatory interchange format is binary PPM (P6,
maxval 255).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import FormatError
from .validation import check_mask, check_rgb_image, check_saliency_map


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left (x, y), extents (w, h), all in pixels."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box extents must be >= 1, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class ConnectedRegion:
    label: int
    pixel_count: int
    bbox: BoundingBox

    def __post_init__(self):
        if self.label < 1:
            raise ValueError(f"label must be >= 1, got {self.label}")
        if not (1 <= self.pixel_count <= self.bbox.area):
            raise ValueError(
                f"pixel_count {self.pixel_count} must be in [1, bbox area {self.bbox.area}]"
            )


THRESHOLD_MODES = ("fixed", "quantile")
CONNECTIVITIES = (4, 8)


@dataclass(frozen=True)
class RoiConfig:
    """Everything the box-extraction path needs.

    threshold is the fixed cutoff when threshold_mode == "fixed" and the
    quantile level q when threshold_mode == "quantile". min_area of None means
    "0.5% of the map's pixels", resolved per map.
    """

    threshold_mode: str = "quantile"
    threshold: float = 0.85
    connectivity: int = 8
    min_area: int | None = None
    max_boxes: int = 3
    box_color: tuple[int, int, int] = (255, 0, 0)
    box_thickness: int = 2

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(
                f"threshold_mode must be one of {THRESHOLD_MODES}, got {self.threshold_mode!r}"
            )
        if self.threshold_mode == "fixed":
            if not 0.0 <= self.threshold <= 1.0:
                raise ValueError(f"fixed threshold must be in [0, 1], got {self.threshold}")
        elif not 0.0 < self.threshold < 1.0:
            raise ValueError(f"quantile level must be in (0, 1), got {self.threshold}")
        if self.connectivity not in CONNECTIVITIES:
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_area is not None and self.min_area < 0:
            raise ValueError(f"min_area must be >= 0, got {self.min_area}")
        if self.max_boxes < 1:
            raise ValueError(f"max_boxes must be >= 1, got {self.max_boxes}")
        if self.box_thickness < 1:
            raise ValueError(f"box_thickness must be >= 1, got {self.box_thickness}")
        color = tuple(int(c) for c in self.box_color)
        if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
            raise ValueError(f"box_color must be an RGB triple in 0..255, got {self.box_color!r}")
        object.__setattr__(self, "box_color", color)

    def resolve_min_area(self, map_area: int | None) -> int:
        if self.min_area is not None:
            return self.min_area
        if map_area is None:
            return 0
        return max(1, round(0.005 * map_area))


def compute_threshold(values, config: RoiConfig) -> float:
    """The cutoff binarize will apply: the fixed value, or the q-quantile of the
    map's cells (linear interpolation between order statistics)."""
    sal = check_saliency_map(values)
    if config.threshold_mode == "fixed":
        return float(config.threshold)
    return float(np.quantile(sal, config.threshold, method="linear"))


def binarize(values, config: RoiConfig) -> np.ndarray:
    """Boolean mask of cells strictly above the configured threshold."""
    sal = check_saliency_map(values)
    return sal > compute_threshold(sal, config)


_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)
_STRUCTURE_8 = np.ones((3, 3), dtype=int)


def label_mask(mask, connectivity: int = 8) -> np.ndarray:
    """Per-pixel region labels under 4- or 8-adjacency; 0 marks background.

    Labels run 1..n in raster-scan order of each region's first pixel.
    """
    arr = check_mask(mask)
    if connectivity not in CONNECTIVITIES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    labeled, count = ndimage.label(arr, structure=structure)
    if count == 0:
        return np.zeros(arr.shape, dtype=np.int32)
    flat = labeled.ravel()
    uniq, first_index = np.unique(flat, return_index=True)
    foreground = uniq != 0
    ordered = uniq[foreground][np.argsort(first_index[foreground], kind="stable")]
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[ordered] = np.arange(1, len(ordered) + 1, dtype=np.int32)
    return remap[labeled]


def connected_components(mask, connectivity: int = 8) -> list[ConnectedRegion]:
    """Maximal foreground regions under 4- or 8-adjacency.

    Labels are assigned 1..n in raster-scan order of each region's first
    pixel; every region carries its tight bounding box and pixel count.
    """
    labeled = label_mask(mask, connectivity)
    count = int(labeled.max())
    if count == 0:
        return []
    sizes = np.bincount(labeled.ravel(), minlength=count + 1)
    slices = ndimage.find_objects(labeled)
    regions = []
    for label in range(1, count + 1):
        rows, cols = slices[label - 1]
        bbox = BoundingBox(
            x=int(cols.start),
            y=int(rows.start),
            w=int(cols.stop - cols.start),
            h=int(rows.stop - rows.start),
        )
        regions.append(
            ConnectedRegion(label=label, pixel_count=int(sizes[label]), bbox=bbox)
        )
    return regions


def select_regions(
    regions, config: RoiConfig, map_area: int | None = None
) -> list[BoundingBox]:
    """Drop regions below min_area, rank by pixel count (ties by label), cap at max_boxes."""
    min_area = config.resolve_min_area(map_area)
    kept = [r for r in regions if r.pixel_count >= min_area]
    kept.sort(key=lambda r: (-r.pixel_count, r.label))
    return [r.bbox for r in kept[: config.max_boxes]]


@dataclass(frozen=True)
class RoiExtraction:
    boxes: tuple[BoundingBox, ...]
    regions: tuple[ConnectedRegion, ...]
    threshold: float
    min_area: int


def extract_boxes(values, config: RoiConfig) -> RoiExtraction:
    """Threshold -> connected components -> region selection, in one call."""
    sal = check_saliency_map(values)
    threshold = compute_threshold(sal, config)
    mask = sal > threshold
    regions = connected_components(mask, config.connectivity)
    min_area = config.resolve_min_area(sal.size)
    boxes = select_regions(regions, replace(config, min_area=min_area))
    return RoiExtraction(
        boxes=tuple(boxes),
        regions=tuple(regions),
        threshold=threshold,
        min_area=min_area,
    )


def render_overlay(image, boxes, config: RoiConfig | None = None) -> np.ndarray:
    """Draw a frame of box_thickness pixels inward from each box edge.

    Only frame pixels change; box interiors and everything outside stay
    byte-identical. Boxes whose frames overlap simply share painted pixels.
    """
    if config is None:
        config = RoiConfig()
    img = check_rgb_image(image).copy()
    height, width = img.shape[:2]
    frame = np.zeros((height, width), dtype=bool)
    t = config.box_thickness
    for box in boxes:
        if box.x + box.w > width or box.y + box.h > height:
            raise ValueError(
                f"box ({box.x},{box.y},{box.w},{box.h}) exceeds image bounds {width}x{height}"
            )
        rect = np.zeros_like(frame)
        rect[box.y : box.y + box.h, box.x : box.x + box.w] = True
        iy0, iy1 = box.y + t, box.y + box.h - t
        ix0, ix1 = box.x + t, box.x + box.w - t
        if iy1 > iy0 and ix1 > ix0:
            rect[iy0:iy1, ix0:ix1] = False
        frame |= rect
    img[frame] = np.asarray(config.box_color, dtype=np.uint8)
    return img


def compute_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Pixel-discrete intersection-over-union of two boxes."""
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    inter = max(0, ix2 - ix) * max(0, iy2 - iy)
    union = a.area + b.area - inter
    return inter / union


def resize_nearest(values, out_height: int, out_width: int) -> np.ndarray:
    """Nearest-neighbor resample; source cell = floor(dst_index * src / dst)."""
    sal = np.asarray(values)
    if sal.ndim != 2 or sal.size == 0:
        raise ValueError(f"saliency map must be a non-empty 2-D grid, got shape {sal.shape}")
    if out_height < 1 or out_width < 1:
        raise ValueError(f"target size must be >= 1x1, got {out_width}x{out_height}")
    in_height, in_width = sal.shape
    rows = (np.arange(out_height) * in_height) // out_height
    cols = (np.arange(out_width) * in_width) // out_width
    return sal[np.ix_(rows, cols)]


def encode_ppm(image) -> bytes:
    """Binary PPM (P6, maxval 255) with the canonical 'P6\\n{w} {h}\\n255\\n' header."""
    img = check_rgb_image(image)
    height, width = img.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    if data[:2] != b"P6":
        raise FormatError(f"bad magic {data[:2]!r}, expected b'P6'")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch == b"#":
                newline = data.find(b"\n", pos)
                pos = len(data) if newline == -1 else newline + 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        token = data[start:pos]
        if not token:
            raise FormatError("truncated PPM header")
        if not token.isdigit():
            raise FormatError(f"bad PPM header token {token!r}")
        fields.append(int(token))
    width, height, maxval = fields
    if width == 0 or height == 0:
        raise FormatError(f"invalid PPM dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval}, expected 255")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after PPM maxval")
    payload = data[pos + 1 :]
    expected = 3 * width * height
    if len(payload) != expected:
        raise FormatError(
            f"PPM payload length mismatch for {width}x{height}: "
            f"expected {expected} bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_ppm(fh.read())


def write_ppm(path, image) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(image))
