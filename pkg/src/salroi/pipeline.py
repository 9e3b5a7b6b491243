"""End-to-end orchestration: question prep, saliency combination, boxes, overlay,
modality selection, enhanced prompt, and the machine-readable run report.

Reports serialize with sorted keys and a fixed schema, so identical inputs
produce byte-identical JSON. Each stage failure is wrapped in a StageError
naming the stage; callers write output files only after every stage succeeds.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ._version import __version__
from .errors import FormatError, StageError
from .harness import SyntheticScene, gen_scene_maps
from .modality import ModalityCatalog, ModalitySelection, build_enhanced_prompt, select_modality
from .roi import RoiConfig, extract_boxes, render_overlay, resize_nearest
from .saliency import SuppressionParams, normalize_map, read_smap, suppress_background
from .textprep import KeywordExtractor, derive_background_text
from .validation import check_rgb_image

CONFIG_ENV = "SALROI_CONFIG"


class SaliencyProvider(Protocol):
    def load(self) -> np.ndarray: ...
    def describe(self) -> str: ...
    def seed(self) -> int | None: ...


@dataclass(frozen=True)
class FileSaliencyProvider:
    path: str

    def load(self) -> np.ndarray:
        return read_smap(self.path)

    def describe(self) -> str:
        return f"file:{self.path}"

    def seed(self) -> int | None:
        return None


@dataclass(frozen=True)
class SyntheticSaliencyProvider:
    """Serves one half of a generated scene; role is 'ori' or 'back'."""

    scene: SyntheticScene
    role: str
    family: str = "scene"
    master_seed: int | None = None

    def __post_init__(self):
        if self.role not in ("ori", "back"):
            raise ValueError(f"role must be 'ori' or 'back', got {self.role!r}")

    def load(self) -> np.ndarray:
        ori, back = gen_scene_maps(self.scene)
        return ori if self.role == "ori" else back

    def describe(self) -> str:
        return f"synthetic:{self.family}:{self.seed()}:{self.role}"

    def seed(self) -> int | None:
        return self.master_seed if self.master_seed is not None else self.scene.seed


@dataclass(kw_only=True)
class PipelineConfig:
    provider_ori: SaliencyProvider
    provider_back: SaliencyProvider
    catalog: ModalityCatalog
    image_embedding: np.ndarray
    keyword_extractor: KeywordExtractor
    suppression: SuppressionParams = field(default_factory=SuppressionParams)
    roi: RoiConfig = field(default_factory=RoiConfig)
    renormalize_combined: bool = False


@dataclass(frozen=True)
class PipelineResult:
    report: dict
    overlay: np.ndarray
    prompt: str
    combined: np.ndarray
    selection: ModalitySelection


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _roi_core(img, provider_ori, provider_back, suppression, roi, renormalize):
    """Shared saliency-to-overlay stages: load, normalize, combine, resize,
    extract boxes, render. Returns (extraction, overlay, combined)."""
    with _stage("load-saliency-ori"):
        raw_ori = provider_ori.load()
    with _stage("load-saliency-back"):
        raw_back = provider_back.load()

    with _stage("normalize"):
        sa_ori = normalize_map(raw_ori)
        sa_back = normalize_map(raw_back)

    with _stage("combine"):
        combined = suppress_background(sa_ori, sa_back, suppression)
        if renormalize:
            combined = normalize_map(combined)

    with _stage("resize"):
        height, width = img.shape[:2]
        if combined.shape != (height, width):
            combined = resize_nearest(combined, height, width)

    with _stage("extract-roi"):
        extraction = extract_boxes(combined, roi)

    with _stage("overlay"):
        overlay = render_overlay(img, extraction.boxes, roi)

    return extraction, overlay, combined


def run_pipeline(image, question: str, config: PipelineConfig) -> PipelineResult:
    """Run every stage in order and assemble the report.

    Order: keyword extraction, background text, saliency loading, per-map
    normalization, gated combination, resize to image resolution, threshold +
    connected components + box selection, overlay rendering, modality
    selection, prompt assembly.
    """
    with _stage("validate"):
        img = check_rgb_image(image)
        question = str(question)
        if not question.strip():
            raise ValueError("question must be non-empty")

    with _stage("keywords"):
        keywords = list(config.keyword_extractor.extract(question))

    with _stage("background-text"):
        background_text = derive_background_text(question, keywords)

    extraction, overlay, combined = _roi_core(
        img,
        config.provider_ori,
        config.provider_back,
        config.suppression,
        config.roi,
        config.renormalize_combined,
    )

    with _stage("modality"):
        selection = select_modality(config.image_embedding, config.catalog)

    with _stage("prompt"):
        prompt = build_enhanced_prompt(selection, question, extraction.boxes)

    report = build_report(
        question=question,
        keywords=keywords,
        background_text=background_text,
        selection=selection,
        boxes=extraction.boxes,
        suppression=config.suppression,
        roi=config.roi,
        threshold_realized=extraction.threshold,
        min_area=extraction.min_area,
        provider_ori=config.provider_ori,
        provider_back=config.provider_back,
    )
    return PipelineResult(
        report=report,
        overlay=overlay,
        prompt=prompt,
        combined=combined,
        selection=selection,
    )


def run_roi_only(
    image,
    provider_ori: SaliencyProvider,
    provider_back: SaliencyProvider,
    suppression: SuppressionParams | None = None,
    roi: RoiConfig | None = None,
    renormalize: bool = False,
):
    """The box-extraction half of the pipeline, without text or modality stages.

    Returns (report, overlay, extraction); the report carries empty text
    fields and a null modality.
    """
    suppression = suppression or SuppressionParams()
    roi = roi or RoiConfig()
    with _stage("validate"):
        img = check_rgb_image(image)
    extraction, overlay, _ = _roi_core(img, provider_ori, provider_back, suppression, roi, renormalize)
    report = build_report(
        question="",
        keywords=[],
        background_text="",
        selection=None,
        boxes=extraction.boxes,
        suppression=suppression,
        roi=roi,
        threshold_realized=extraction.threshold,
        min_area=extraction.min_area,
        provider_ori=provider_ori,
        provider_back=provider_back,
    )
    return report, overlay, extraction


def build_report(
    *,
    question: str,
    keywords,
    background_text: str,
    selection: ModalitySelection | None,
    boxes,
    suppression: SuppressionParams,
    roi: RoiConfig,
    threshold_realized: float,
    min_area: int,
    provider_ori: SaliencyProvider,
    provider_back: SaliencyProvider,
) -> dict:
    if selection is None:
        modality = None
    else:
        modality = {
            "label": selection.label,
            "scores": [{"label": l, "score": float(s)} for l, s in selection.all_scores],
        }
    seed = provider_ori.seed()
    if seed is None:
        seed = provider_back.seed()
    return {
        "version": __version__,
        "question": question,
        "keywords": [str(k) for k in keywords],
        "background_text": background_text,
        "modality": modality,
        "boxes": [
            {"x": b.x, "y": b.y, "w": b.w, "h": b.h, "area": b.area} for b in boxes
        ],
        "s3": {
            "delta": float(suppression.delta),
            "epsilon": float(suppression.epsilon),
            "clamp": bool(suppression.clamp_nonnegative),
        },
        "roi": {
            "mode": roi.threshold_mode,
            "threshold_realized": float(threshold_realized),
            "connectivity": int(roi.connectivity),
            "min_area": int(min_area),
            "max_boxes": int(roi.max_boxes),
        },
        "provenance": {
            "provider_ori": provider_ori.describe(),
            "provider_back": provider_back.describe(),
            "seed": seed,
        },
    }


def report_to_json(report: dict) -> str:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# Settings files are flat UTF-8 key=value lines; '#' starts a comment.

_BOOL_VALUES = {
    "1": True, "true": True, "yes": True, "on": True,
    "0": False, "false": False, "no": False, "off": False,
}

KNOWN_SETTINGS = (
    "delta",
    "epsilon",
    "clamp",
    "threshold_mode",
    "threshold",
    "connectivity",
    "min_area",
    "max_boxes",
    "box_color",
    "box_thickness",
    "top_k",
    "renormalize",
)


def parse_settings_text(text: str, source: str = "settings") -> dict[str, str]:
    settings: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{source} line {lineno}: expected 'key=value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_SETTINGS:
            raise FormatError(
                f"{source} line {lineno}: unknown key {key!r}; valid keys are {', '.join(KNOWN_SETTINGS)}"
            )
        settings[key] = value
    return settings


def load_settings_file(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_settings_text(fh.read(), source=str(path))


def _coerce_bool(value, key: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text not in _BOOL_VALUES:
        raise FormatError(f"setting {key}: expected a boolean, got {value!r}")
    return _BOOL_VALUES[text]


def _coerce_color(value, key: str) -> tuple[int, int, int]:
    if isinstance(value, tuple):
        return value
    parts = str(value).split(",")
    if len(parts) != 3:
        raise FormatError(f"setting {key}: expected 'R,G,B', got {value!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise FormatError(f"setting {key}: expected integers, got {value!r}") from exc


def settings_to_params(settings: dict) -> tuple[SuppressionParams, RoiConfig, dict]:
    """Build typed configs from merged string settings.

    Returns the suppression params, the ROI config, and leftover extras
    (top_k, renormalize) as a dict.
    """
    def _float(key, default):
        if key not in settings:
            return default
        try:
            return float(settings[key])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"setting {key}: expected a number, got {settings[key]!r}") from exc

    def _int(key, default):
        if key not in settings or settings[key] is None:
            return default
        try:
            return int(settings[key])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"setting {key}: expected an integer, got {settings[key]!r}") from exc

    try:
        suppression = SuppressionParams(
            delta=_float("delta", 0.6),
            epsilon=_float("epsilon", 2.0),
            clamp_nonnegative=_coerce_bool(settings.get("clamp", True), "clamp"),
        )
        roi = RoiConfig(
            threshold_mode=str(settings.get("threshold_mode", "quantile")),
            threshold=_float("threshold", 0.85),
            connectivity=_int("connectivity", 8),
            min_area=_int("min_area", None),
            max_boxes=_int("max_boxes", 3),
            box_color=_coerce_color(settings.get("box_color", (255, 0, 0)), "box_color"),
            box_thickness=_int("box_thickness", 2),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    extras = {
        "top_k": _int("top_k", 5),
        "renormalize": _coerce_bool(settings.get("renormalize", False), "renormalize"),
    }
    return suppression, roi, extras


def default_settings_path() -> str | None:
    return os.environ.get(CONFIG_ENV)
