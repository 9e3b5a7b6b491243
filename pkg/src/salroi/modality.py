"""Zero-shot modality selection by cosine argmax, plus enhanced-prompt assembly.

Embeddings arrive through EMB1 files (no encoder runs here): the ASCII magic
``EMB1``, version and dim as unsigned 32-bit little-endian integers, then
``dim`` IEEE-754 32-bit little-endian floats. A catalog manifest is a UTF-8
file of ``label<TAB>path-to-emb-file`` lines, paths relative to the manifest.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import FormatError
from .roi import BoundingBox
from .validation import check_embedding, embedding_norm

EMB_MAGIC = b"EMB1"
EMB_VERSION = 1
_HEADER = struct.Struct("<4sII")


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| * |b|); requires equal dims and nonzero norms."""
    va = check_embedding(a, "first embedding")
    vb = check_embedding(b, "second embedding")
    if va.shape != vb.shape:
        raise ValueError(f"embedding dim mismatch: {va.size} vs {vb.size}")
    return float(np.dot(va, vb) / (embedding_norm(va, "first embedding") * embedding_norm(vb, "second embedding")))


@dataclass(frozen=True)
class ModalityCatalog:
    """Ordered (label, embedding) entries sharing one dimension."""

    labels: tuple[str, ...]
    embeddings: np.ndarray

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("catalog must have at least one entry")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("catalog labels must be unique")
        arr = np.asarray(self.embeddings, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != len(self.labels) or arr.shape[1] == 0:
            raise ValueError(
                f"embeddings must have shape ({len(self.labels)}, dim), got {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("catalog embeddings must be finite")
        for label, row in zip(self.labels, arr):
            if float(np.linalg.norm(row)) == 0.0:
                raise ValueError(f"catalog embedding for {label!r} has zero norm")
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))
        object.__setattr__(self, "embeddings", arr)

    @classmethod
    def from_entries(cls, entries) -> "ModalityCatalog":
        pairs = list(entries)
        if not pairs:
            raise ValueError("catalog must have at least one entry")
        labels = tuple(label for label, _ in pairs)
        embeddings = np.stack([np.asarray(vec, dtype=np.float64) for _, vec in pairs])
        return cls(labels, embeddings)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ModalitySelection:
    label: str
    score: float
    all_scores: tuple[tuple[str, float], ...]


def select_modality(image_emb, catalog: ModalityCatalog) -> ModalitySelection:
    """Score every catalog entry by cosine similarity and pick the argmax.

    Ties break to the lowest catalog index. all_scores preserves catalog order.
    """
    emb = check_embedding(image_emb, "image embedding")
    embedding_norm(emb, "image embedding")
    if emb.size != catalog.dim:
        raise ValueError(
            f"image embedding dim {emb.size} does not match catalog dim {catalog.dim}"
        )
    scores = tuple(
        (label, cosine_similarity(emb, catalog.embeddings[i]))
        for i, label in enumerate(catalog.labels)
    )
    best = max(range(len(scores)), key=lambda i: scores[i][1])
    return ModalitySelection(label=scores[best][0], score=scores[best][1], all_scores=scores)


def build_enhanced_prompt(modality, question: str, boxes) -> str:
    """Deterministic prompt naming the modality, the ROI boxes, and the question."""
    label = modality.label if isinstance(modality, ModalitySelection) else str(modality)
    boxes = list(boxes)
    if boxes:
        listed = ";".join(f"{b.x},{b.y},{b.w},{b.h}" for b in boxes)
        regions = f"{len(boxes)} box(es) at {listed}"
    else:
        regions = "none"
    return f"Image modality: {label}. Regions of interest: {regions}. Question: {question}"


def encode_embedding(values) -> bytes:
    emb = check_embedding(values)
    payload = np.ascontiguousarray(emb, dtype="<f4").tobytes()
    return _HEADER.pack(EMB_MAGIC, EMB_VERSION, emb.size) + payload


def decode_embedding(data: bytes) -> np.ndarray:
    """Parse EMB1 bytes into a float32 vector."""
    if len(data) < _HEADER.size:
        raise FormatError(f"EMB1 header needs {_HEADER.size} bytes, got {len(data)}")
    magic, version, dim = _HEADER.unpack_from(data)
    if magic != EMB_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {EMB_MAGIC!r}")
    if version != EMB_VERSION:
        raise FormatError(f"unsupported EMB1 version {version}")
    if dim == 0:
        raise FormatError("EMB1 dim must be >= 1")
    expected = _HEADER.size + 4 * dim
    if len(data) != expected:
        raise FormatError(
            f"EMB1 length mismatch for dim {dim}: expected {expected} bytes, got {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if not np.isfinite(values).all():
        idx = int(np.argwhere(~np.isfinite(values))[0][0])
        raise FormatError(f"EMB1 value {idx} is non-finite")
    return values.copy()


def read_embedding(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_embedding(fh.read())


def write_embedding(path, values) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_embedding(values))


def load_catalog_manifest(path) -> ModalityCatalog:
    """Read a ``label<TAB>path`` manifest and decode every referenced EMB1 file."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    entries = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise FormatError(
                f"catalog manifest line {lineno}: expected 'label<TAB>path', got {raw!r}"
            )
        label, rel = (part.strip() for part in line.split("\t", 1))
        if not label or not rel:
            raise FormatError(f"catalog manifest line {lineno}: empty label or path")
        if label in seen:
            raise FormatError(f"catalog manifest line {lineno}: duplicate label {label!r}")
        seen.add(label)
        emb_path = rel if os.path.isabs(rel) else os.path.join(base, rel)
        entries.append((label, read_embedding(emb_path)))
    if not entries:
        raise FormatError(f"catalog manifest {path} has no entries")
    return ModalityCatalog.from_entries(entries)


def default_modality_labels() -> tuple[str, ...]:
    """The labels shipped with the package; users supply matching embedding files."""
    text = resources.files("salroi").joinpath("data/modality_labels.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


def serialize_boxes(boxes) -> str:
    return ";".join(f"{b.x},{b.y},{b.w},{b.h}" for b in boxes)


def parse_box(text: str) -> BoundingBox:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"expected 'x,y,w,h', got {text!r}")
    x, y, w, h = (int(p) for p in parts)
    return BoundingBox(x, y, w, h)
