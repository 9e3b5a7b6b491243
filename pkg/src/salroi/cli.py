"""Command-line interface.

Subcommands: roi, tpe, textprep, pipeline, harness, smap, emb.
Exit codes: 0 success, 1 usage error, 2 data/format error, 3 pipeline-stage
error. Output files are written atomically after all stages succeed, so a
failed run leaves no partial outputs behind.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from ._version import __version__
from .errors import FormatError, StageError
from .harness import (
    FAMILIES,
    SWEEP_KEYS,
    evaluate,
    make_scenes,
    sweep,
)
from .modality import (
    load_catalog_manifest,
    read_embedding,
    select_modality,
    write_embedding,
)
from .pipeline import (
    FileSaliencyProvider,
    PipelineConfig,
    SyntheticSaliencyProvider,
    default_settings_path,
    load_settings_file,
    report_to_json,
    run_pipeline,
    run_roi_only,
    settings_to_params,
)
from .roi import encode_ppm, read_ppm
from .saliency import map_from_text, map_to_text, read_smap, write_smap
from .textprep import (
    LexiconKeywordExtractor,
    StaticKeywordExtractor,
    derive_background_text,
    load_lexicon,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_STAGE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this tool reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_options(parser):
    parser.add_argument("--config", help="key=value settings file (flags win over it)")
    parser.add_argument("--delta", type=float, default=None, help="background gate in [0,1]")
    parser.add_argument("--epsilon", type=float, default=None, help="gain above the gate (> 0)")
    parser.add_argument(
        "--clamp",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="floor negative differences at zero",
    )
    parser.add_argument("--mode", choices=("fixed", "quantile"), default=None, help="threshold mode")
    parser.add_argument("--threshold", type=float, default=None, help="fixed cutoff or quantile level")
    parser.add_argument("--connectivity", type=int, choices=(4, 8), default=None)
    parser.add_argument("--min-area", type=int, default=None, help="minimum region pixels")
    parser.add_argument("--max-boxes", type=int, default=None)
    parser.add_argument("--thickness", type=int, default=None, help="box frame thickness")
    parser.add_argument("--color", default=None, help="box color as R,G,B")
    parser.add_argument(
        "--renormalize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="min-max rescale the combined map before thresholding",
    )


_FLAG_TO_SETTING = (
    ("delta", "delta"),
    ("epsilon", "epsilon"),
    ("clamp", "clamp"),
    ("mode", "threshold_mode"),
    ("threshold", "threshold"),
    ("connectivity", "connectivity"),
    ("min_area", "min_area"),
    ("max_boxes", "max_boxes"),
    ("thickness", "box_thickness"),
    ("color", "box_color"),
    ("top_k", "top_k"),
    ("renormalize", "renormalize"),
)


def _collect_settings(args) -> dict:
    settings: dict = {}
    env_path = default_settings_path()
    if env_path:
        settings.update(load_settings_file(env_path))
    if getattr(args, "config", None):
        settings.update(load_settings_file(args.config))
    for attr, key in _FLAG_TO_SETTING:
        value = getattr(args, attr, None)
        if value is not None:
            settings[key] = value
    return settings


def _make_provider(spec: str, role: str):
    """A provider from 'path.smap' or 'synthetic:FAMILY:SEED'."""
    if spec.startswith("synthetic:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"synthetic provider must be 'synthetic:FAMILY:SEED', got {spec!r}")
        _, family, seed_text = parts
        try:
            seed = int(seed_text)
        except ValueError as exc:
            raise ValueError(f"synthetic provider seed must be an integer, got {seed_text!r}") from exc
        scene = make_scenes(family, 1, seed)[0]
        return SyntheticSaliencyProvider(scene, role, family=family, master_seed=seed)
    return FileSaliencyProvider(spec)


def _write_outputs(outputs) -> None:
    """Write (path, bytes) pairs via temp files, renaming only when all succeed."""
    staged = []
    try:
        for path, data in outputs:
            tmp = f"{path}.tmp"
            with open(tmp, "wb") as fh:
                fh.write(data)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            try:
                os.remove(tmp)
            except OSError:
                pass
        raise


def _keyword_extractor(args):
    if getattr(args, "lexicon", None) and getattr(args, "keywords", None):
        raise ValueError("pass either --lexicon or --keywords, not both")
    if getattr(args, "lexicon", None):
        top_k = args.top_k if getattr(args, "top_k", None) else 5
        return LexiconKeywordExtractor(load_lexicon(args.lexicon), top_k=top_k)
    if getattr(args, "keywords", None):
        parts = tuple(k.strip() for k in args.keywords.split(",") if k.strip())
        return StaticKeywordExtractor(parts)
    return StaticKeywordExtractor(())


def cmd_roi(args) -> int:
    suppression, roi_config, extras = settings_to_params(_collect_settings(args))
    image = read_ppm(args.image)
    provider_ori = _make_provider(args.ori, "ori")
    provider_back = _make_provider(args.back, "back")
    report, overlay, extraction = run_roi_only(
        image, provider_ori, provider_back, suppression, roi_config, extras["renormalize"]
    )
    outputs = []
    if args.out_json:
        outputs.append((args.out_json, report_to_json(report).encode("utf-8")))
    if args.out_image:
        outputs.append((args.out_image, encode_ppm(overlay)))
    _write_outputs(outputs)
    print(f"threshold: {extraction.threshold!r}")
    if extraction.boxes:
        for box in extraction.boxes:
            print(f"box: {box.x},{box.y},{box.w},{box.h}")
    else:
        print("box: none")
    return EXIT_OK


def cmd_tpe(args) -> int:
    emb = read_embedding(args.image_emb)
    catalog = load_catalog_manifest(args.catalog)
    selection = select_modality(emb, catalog)
    print(f"modality: {selection.label}")
    for label, score in selection.all_scores:
        print(f"{label}\t{score!r}")
    if args.out_json:
        payload = {
            "label": selection.label,
            "scores": [{"label": l, "score": s} for l, s in selection.all_scores],
        }
        _write_outputs([(args.out_json, (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8"))])
    return EXIT_OK


def cmd_textprep(args) -> int:
    extractor = _keyword_extractor(args)
    keywords = extractor.extract(args.question)
    background = derive_background_text(args.question, keywords)
    print(f"keywords: {', '.join(keywords) if keywords else '(none)'}")
    print(f"background: {background}")
    if args.out_json:
        payload = {
            "question": args.question,
            "keywords": keywords,
            "background_text": background,
        }
        _write_outputs([(args.out_json, (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8"))])
    return EXIT_OK


def cmd_pipeline(args) -> int:
    settings = _collect_settings(args)
    suppression, roi_config, extras = settings_to_params(settings)
    image = read_ppm(args.image)
    config = PipelineConfig(
        provider_ori=_make_provider(args.ori, "ori"),
        provider_back=_make_provider(args.back, "back"),
        catalog=load_catalog_manifest(args.catalog),
        image_embedding=read_embedding(args.image_emb),
        keyword_extractor=_keyword_extractor(args),
        suppression=suppression,
        roi=roi_config,
        renormalize_combined=extras["renormalize"],
    )
    result = run_pipeline(image, args.question, config)
    outputs = []
    if args.out_json:
        outputs.append((args.out_json, report_to_json(result.report).encode("utf-8")))
    if args.out_image:
        outputs.append((args.out_image, encode_ppm(result.overlay)))
    _write_outputs(outputs)
    print(result.prompt)
    return EXIT_OK


def _parse_sweep_specs(specs) -> dict[str, list]:
    grid: dict[str, list] = {}
    for spec in specs:
        if "=" not in spec:
            raise ValueError(f"sweep spec must be 'key=start:stop:step', got {spec!r}")
        key, text = (part.strip() for part in spec.split("=", 1))
        if key not in SWEEP_KEYS:
            raise ValueError(f"unknown sweep key {key!r}; valid keys are {', '.join(SWEEP_KEYS)}")
        if key in grid:
            raise ValueError(f"duplicate sweep key {key!r}")
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError(f"sweep range must be start:stop:step, got {text!r}")
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError(f"sweep range needs step > 0 and stop >= start, got {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 10) for i in range(count)]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
            if not values:
                raise ValueError(f"sweep spec {spec!r} has no values")
        if key == "connectivity":
            values = [int(round(v)) for v in values]
        grid[key] = values
    return grid


def _format_table(headers, rows) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def _stats_cells(stats) -> list[str]:
    return [
        f"{stats.mean_iou:.4f}",
        f"{stats.median_iou:.4f}",
        f"{stats.success[0.3]:.4f}",
        f"{stats.success[0.5]:.4f}",
        f"{stats.success[0.7]:.4f}",
    ]


def cmd_harness(args) -> int:
    settings = _collect_settings(args)
    suppression, roi_config, _ = settings_to_params(settings)
    scenes = make_scenes(
        args.family,
        args.scenes,
        args.seed,
        width=args.width,
        height=args.height,
        noise_sigma=args.noise_sigma,
    )
    report = {
        "version": __version__,
        "family": args.family,
        "scenes": args.scenes,
        "seed": args.seed,
        "noise_sigma": args.noise_sigma,
        "width": args.width,
        "height": args.height,
        "s3": {
            "delta": suppression.delta,
            "epsilon": suppression.epsilon,
            "clamp": suppression.clamp_nonnegative,
        },
        "roi": {
            "mode": roi_config.threshold_mode,
            "threshold": roi_config.threshold,
            "connectivity": roi_config.connectivity,
            "min_area": roi_config.min_area,
            "max_boxes": roi_config.max_boxes,
        },
    }
    stat_headers = ["mean_iou", "median_iou", "succ@0.3", "succ@0.5", "succ@0.7"]
    if args.sweep:
        grid = _parse_sweep_specs(args.sweep)
        rows = sweep(scenes, grid, suppression, roi_config)
        keys = [key for key in SWEEP_KEYS if key in grid]
        report["methods"] = None
        report["sweep"] = [
            {
                "params": row["params"],
                "methods": {
                    "suppress": row["suppress"].to_json_dict(),
                    "naive": row["naive"].to_json_dict(),
                },
            }
            for row in rows
        ]
        headers = keys + ["method"] + stat_headers
        table_rows = []
        for row in rows:
            base = [f"{row['params'][k]:g}" for k in keys]
            table_rows.append(base + ["suppress"] + _stats_cells(row["suppress"]))
            table_rows.append(base + ["naive"] + _stats_cells(row["naive"]))
        print(_format_table(headers, table_rows))
    else:
        stats = {
            "suppress": evaluate(scenes, "suppress", suppression, roi_config),
            "naive": evaluate(scenes, "naive", suppression, roi_config),
        }
        report["methods"] = {name: s.to_json_dict() for name, s in stats.items()}
        report["sweep"] = []
        table_rows = [
            ["suppress"] + _stats_cells(stats["suppress"]),
            ["naive"] + _stats_cells(stats["naive"]),
        ]
        print(_format_table(["method"] + stat_headers, table_rows))
    if args.out:
        _write_outputs([(args.out, (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8"))])
    return EXIT_OK


def cmd_smap(args) -> int:
    if args.action == "info":
        arr = read_smap(args.path)
        height, width = arr.shape
        print(
            f"width={width} height={height} "
            f"min={float(arr.min())!r} max={float(arr.max())!r} mean={float(arr.mean())!r}"
        )
    elif args.action == "to-text":
        text = map_to_text(read_smap(args.path))
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:  # from-text
        with open(args.path, "r", encoding="utf-8") as fh:
            arr = map_from_text(fh.read())
        write_smap(args.out, arr)
        print(f"wrote {args.out} ({arr.shape[1]}x{arr.shape[0]})")
    return EXIT_OK


def cmd_emb(args) -> int:
    if args.action == "info":
        vec = read_embedding(args.path)
        print(f"dim={vec.size} norm={float(np.linalg.norm(vec))!r}")
    elif args.action == "to-text":
        vec = read_embedding(args.path)
        text = "\n".join(repr(float(v)) for v in vec) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:  # from-text
        with open(args.path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines:
            raise FormatError("embedding text is empty")
        try:
            values = np.asarray([float(ln) for ln in lines], dtype=np.float32)
        except ValueError as exc:
            raise FormatError("embedding text has a non-numeric line") from exc
        write_embedding(args.out, values)
        print(f"wrote {args.out} (dim={values.size})")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="salroi", description=__doc__)
    parser.add_argument("--version", action="version", version=f"salroi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_roi = sub.add_parser("roi", help="saliency files to boxes and a red-box overlay")
    p_roi.add_argument("--ori", required=True, help="original saliency: SMAP path or synthetic:FAMILY:SEED")
    p_roi.add_argument("--back", required=True, help="background saliency: SMAP path or synthetic:FAMILY:SEED")
    p_roi.add_argument("--image", required=True, help="input PPM image")
    p_roi.add_argument("--out-json", help="write the run report here")
    p_roi.add_argument("--out-image", help="write the overlay PPM here")
    _add_config_options(p_roi)
    p_roi.set_defaults(func=cmd_roi)

    p_tpe = sub.add_parser("tpe", help="pick the modality by cosine argmax")
    p_tpe.add_argument("--image-emb", required=True, help="EMB1 file with the image embedding")
    p_tpe.add_argument("--catalog", required=True, help="label<TAB>emb-path manifest")
    p_tpe.add_argument("--out-json", help="write {label, scores} here")
    p_tpe.set_defaults(func=cmd_tpe)

    p_text = sub.add_parser("textprep", help="extract keywords and derive the background text")
    p_text.add_argument("--question", required=True)
    p_text.add_argument("--lexicon", help="term<TAB>weight lexicon file")
    p_text.add_argument("--keywords", help="comma-separated keywords (bypasses the lexicon)")
    p_text.add_argument("--top-k", type=int, default=None)
    p_text.add_argument("--out-json")
    p_text.set_defaults(func=cmd_textprep)

    p_pipe = sub.add_parser("pipeline", help="full run: text prep, saliency, boxes, overlay, modality, prompt")
    p_pipe.add_argument("--image", required=True, help="input PPM image")
    p_pipe.add_argument("--question", required=True)
    p_pipe.add_argument("--ori", required=True, help="original saliency: SMAP path or synthetic:FAMILY:SEED")
    p_pipe.add_argument("--back", required=True, help="background saliency: SMAP path or synthetic:FAMILY:SEED")
    p_pipe.add_argument("--image-emb", required=True, help="EMB1 file with the image embedding")
    p_pipe.add_argument("--catalog", required=True, help="label<TAB>emb-path manifest")
    p_pipe.add_argument("--lexicon", help="term<TAB>weight lexicon file")
    p_pipe.add_argument("--keywords", help="comma-separated keywords (bypasses the lexicon)")
    p_pipe.add_argument("--top-k", type=int, default=None)
    p_pipe.add_argument("--out-json", help="write the run report here")
    p_pipe.add_argument("--out-image", help="write the overlay PPM here")
    _add_config_options(p_pipe)
    p_pipe.set_defaults(func=cmd_pipeline)

    p_har = sub.add_parser("harness", help="synthetic-scene comparison of suppression vs plain subtraction")
    p_har.add_argument("--scenes", type=int, default=100)
    p_har.add_argument("--seed", type=int, default=0)
    p_har.add_argument("--family", choices=FAMILIES, default="fp-overlap")
    p_har.add_argument("--noise-sigma", type=float, default=0.0)
    p_har.add_argument("--width", type=int, default=64)
    p_har.add_argument("--height", type=int, default=64)
    p_har.add_argument(
        "--sweep",
        action="append",
        default=[],
        metavar="KEY=START:STOP:STEP",
        help="repeatable; keys: delta, epsilon, q, connectivity",
    )
    p_har.add_argument("--out", help="write the JSON report here")
    _add_config_options(p_har)
    p_har.set_defaults(func=cmd_harness)

    p_smap = sub.add_parser("smap", help="inspect or convert SMAP files")
    smap_sub = p_smap.add_subparsers(dest="action", required=True, parser_class=_Parser)
    smap_info = smap_sub.add_parser("info", help="print dimensions and value range")
    smap_info.add_argument("path")
    smap_to = smap_sub.add_parser("to-text", help="dump as a plain-text grid")
    smap_to.add_argument("path")
    smap_to.add_argument("-o", "--out")
    smap_from = smap_sub.add_parser("from-text", help="build an SMAP file from a text grid")
    smap_from.add_argument("path")
    smap_from.add_argument("-o", "--out", required=True)
    p_smap.set_defaults(func=cmd_smap)

    p_emb = sub.add_parser("emb", help="inspect or convert EMB1 files")
    emb_sub = p_emb.add_subparsers(dest="action", required=True, parser_class=_Parser)
    emb_info = emb_sub.add_parser("info", help="print dim and norm")
    emb_info.add_argument("path")
    emb_to = emb_sub.add_parser("to-text", help="dump one value per line")
    emb_to.add_argument("path")
    emb_to.add_argument("-o", "--out")
    emb_from = emb_sub.add_parser("from-text", help="build an EMB1 file from value lines")
    emb_from.add_argument("path")
    emb_from.add_argument("-o", "--out", required=True)
    p_emb.set_defaults(func=cmd_emb)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"salroi: error: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, FormatError) else EXIT_STAGE
    except FormatError as exc:
        print(f"salroi: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"salroi: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run() -> None:
    sys.exit(main())
