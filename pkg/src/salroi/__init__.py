"""salroi: training-free saliency postprocessing for region-of-interest prompting.

Turns a pair of saliency heatmaps (question-conditioned and background-
conditioned) into bounding boxes and a red-box overlay, picks the image
modality by cosine argmax over an embedding catalog, and assembles an
enhanced text prompt. A synthetic-scene harness quantifies what the gated
subtraction buys over plain subtraction.
"""

from ._version import __version__
from .errors import FormatError, SalroiError, StageError
from .estimators import (
    BackgroundTextTransformer,
    ModalityClassifier,
    RoiBoxExtractor,
    SaliencySuppressor,
)
from .harness import (
    SyntheticScene,
    evaluate,
    fp_overlap_demo_scene,
    gen_scene_maps,
    make_scenes,
    sweep,
)
from .modality import (
    ModalityCatalog,
    ModalitySelection,
    build_enhanced_prompt,
    cosine_similarity,
    decode_embedding,
    default_modality_labels,
    encode_embedding,
    load_catalog_manifest,
    read_embedding,
    select_modality,
    write_embedding,
)
from .pipeline import (
    FileSaliencyProvider,
    PipelineConfig,
    PipelineResult,
    SyntheticSaliencyProvider,
    report_to_json,
    run_pipeline,
    run_roi_only,
)
from .roi import (
    BoundingBox,
    ConnectedRegion,
    RoiConfig,
    RoiExtraction,
    binarize,
    compute_iou,
    compute_threshold,
    connected_components,
    decode_ppm,
    encode_ppm,
    extract_boxes,
    label_mask,
    read_ppm,
    render_overlay,
    resize_nearest,
    select_regions,
    write_ppm,
)
from .saliency import (
    SuppressionParams,
    decode_smap,
    encode_smap,
    normalize_map,
    read_smap,
    subtract_naive,
    suppress_background,
    write_smap,
)
from .textprep import (
    Lexicon,
    LexiconKeywordExtractor,
    StaticKeywordExtractor,
    Token,
    derive_background_text,
    extract_keywords,
    load_lexicon,
    tokenize,
)

__all__ = [
    "__version__",
    "BackgroundTextTransformer",
    "BoundingBox",
    "ConnectedRegion",
    "FileSaliencyProvider",
    "FormatError",
    "Lexicon",
    "LexiconKeywordExtractor",
    "ModalityCatalog",
    "ModalityClassifier",
    "ModalitySelection",
    "PipelineConfig",
    "PipelineResult",
    "RoiBoxExtractor",
    "RoiConfig",
    "RoiExtraction",
    "SalroiError",
    "SaliencySuppressor",
    "StageError",
    "StaticKeywordExtractor",
    "SuppressionParams",
    "SyntheticSaliencyProvider",
    "SyntheticScene",
    "Token",
    "binarize",
    "build_enhanced_prompt",
    "compute_iou",
    "compute_threshold",
    "connected_components",
    "cosine_similarity",
    "decode_embedding",
    "decode_ppm",
    "decode_smap",
    "default_modality_labels",
    "derive_background_text",
    "encode_embedding",
    "encode_ppm",
    "encode_smap",
    "evaluate",
    "extract_boxes",
    "extract_keywords",
    "fp_overlap_demo_scene",
    "gen_scene_maps",
    "label_mask",
    "load_catalog_manifest",
    "load_lexicon",
    "make_scenes",
    "normalize_map",
    "read_embedding",
    "read_ppm",
    "read_smap",
    "render_overlay",
    "report_to_json",
    "resize_nearest",
    "run_pipeline",
    "run_roi_only",
    "select_modality",
    "select_regions",
    "subtract_naive",
    "suppress_background",
    "sweep",
    "tokenize",
    "write_embedding",
    "write_ppm",
    "write_smap",
]
