"""Command-line interface.

Verbs: index, search, describe-search, evaluate, serve, presets.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Sequence

from .errors import LabReidError
from .masks import LabelMapping, ParserClass
from .presets import DEFAULT_PRESET, list_presets, load_preset
from .query import DescriptionQuery, RegionTerm, description_from_document
from .store import (
    FeatureStore,
    SearchResponse,
    build_index,
    search_by_description,
    search_by_image,
)
from .texture import TextureClass, load_encoder

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; this CLI reserves
    2 for data errors, so usage failures are rerouted."""

    def error(self, message: str):  # noqa: D401
        raise _UsageError(message)


def _load_encoder_arg(path: str | None):
    if path is None:
        return None
    return load_encoder(path)


def _load_mapping_arg(path: str | None) -> LabelMapping | None:
    if path is None:
        return None
    return LabelMapping.from_file(path)


def _pipeline_parts(args):
    from .features import PipelineConfig

    preset = load_preset(args.preset)
    cfg = PipelineConfig.from_preset(preset)
    return preset, cfg


def _parse_term(spec: str) -> tuple[ParserClass, RegionTerm]:
    """One --term: region[:color=<name|L,a,b>][:texture=<class>]."""
    parts = spec.split(":")
    region = ParserClass.from_name(parts[0])
    color: str | tuple[float, float, float] | None = None
    texture: TextureClass | None = None
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise _UsageError(f"bad term component {part!r}, expected key=value")
        if key == "color":
            if "," in value:
                try:
                    l_, a, b = (float(x) for x in value.split(","))
                except ValueError:
                    raise _UsageError(f"bad Lab triple {value!r}") from None
                color = (l_, a, b)
            else:
                color = value
        elif key == "texture":
            texture = TextureClass.from_name(value)
        else:
            raise _UsageError(f"unknown term key {key!r} (use color= or texture=)")
    return region, RegionTerm(color=color, texture=texture)


def _print_response(resp: SearchResponse, preset_name: str, as_json: bool) -> None:
    if as_json:
        from .service import _search_to_doc

        print(json.dumps(_search_to_doc(resp, preset_name), indent=2, sort_keys=True))
        return
    print(f"query regions: {', '.join(c.config_name for c in resp.query_regions)}")
    print(f"max achievable score: {resp.max_score:g}")
    for rank, r in enumerate(resp.results, start=1):
        regions = ",".join(c.config_name for c in r.used_regions) or "-"
        print(f"{rank:3d}  {r.image_id}  {r.s_tot:.4f} out of {resp.max_score:g}  [{regions}]")


def _cmd_index(args) -> int:
    preset, cfg = _pipeline_parts(args)
    store = build_index(
        args.images,
        args.masks,
        cfg,
        encoder=_load_encoder_arg(args.encoder),
        mapping=_load_mapping_arg(args.labelmap),
        strict=args.strict,
    )
    store.save(args.out)
    print(f"indexed {len(store)} images -> {args.out} (fingerprint {store.fingerprint[:12]})")
    return EXIT_OK


def _cmd_search(args) -> int:
    store = FeatureStore.load(args.store)
    resp = search_by_image(
        store,
        Path(args.image).read_bytes(),
        Path(args.mask).read_bytes(),
        top_k=args.top_k,
        preset=args.preset,
        encoder=_load_encoder_arg(args.encoder),
        mapping=_load_mapping_arg(args.labelmap),
    )
    _print_response(resp, args.preset, args.json)
    return EXIT_OK


def _build_description(args) -> DescriptionQuery:
    if args.query_file:
        doc = json.loads(Path(args.query_file).read_text(encoding="utf-8"))
        return description_from_document(doc)
    if not args.term:
        raise _UsageError("describe-search needs --query-file or at least one --term")
    regions: dict[ParserClass, RegionTerm] = {}
    for spec in args.term:
        region, term = _parse_term(spec)
        if region in regions:
            raise _UsageError(f"region {region.config_name} described twice")
        regions[region] = term
    return DescriptionQuery(regions=regions)


def _cmd_describe_search(args) -> int:
    store = FeatureStore.load(args.store)
    dq = _build_description(args)
    resp = search_by_description(store, dq, top_k=args.top_k, preset=args.preset)
    _print_response(resp, args.preset, args.json)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from .evaluate import ablation_sweep
    from .report import format_table, write_report

    preset_names = args.preset or [DEFAULT_PRESET]
    reports = ablation_sweep(
        args.dataset,
        args.masks,
        preset_names,
        encoder=_load_encoder_arg(args.encoder),
        mapping=_load_mapping_arg(args.labelmap),
    )
    print(format_table(reports))
    if args.report:
        written = write_report(reports, args.report)
        for path in written["table"] + written["figures"]:
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import serve

    store = FeatureStore.load(args.store)
    serve(
        store,
        host=args.host,
        port=args.port,
        images_dir=args.images,
        encoder=_load_encoder_arg(args.encoder),
        mapping=_load_mapping_arg(args.labelmap),
    )
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.json:
        docs = {}
        for name in list_presets():
            p = load_preset(name)
            docs[name] = {
                "channel_weights": dict(zip(("L", "a", "b", "d", "t"), p.channel_weights.as_tuple())),
                "class_weights": {c.config_name: w for c, w in p.class_weights.table.items()},
                "smoothing": {
                    "filter_length": p.smoothing.filter_length,
                    "before_compression": p.smoothing.apply_before_compression,
                },
                "binarize_factor": p.binarize_factor,
                "d_threshold": p.distance.d_threshold,
            }
        print(json.dumps({"presets": docs, "default": DEFAULT_PRESET}, indent=2, sort_keys=True))
        return EXIT_OK
    for name in list_presets():
        p = load_preset(name)
        ch = "/".join(f"{w:g}" for w in p.channel_weights.as_tuple())
        cl = "/".join(f"{p.class_weights.weight(c):g}" for c in sorted(p.class_weights.table, key=int))
        sm = f"lf={p.smoothing.filter_length} {'before' if p.smoothing.apply_before_compression else 'after'}"
        marker = " (default)" if name == DEFAULT_PRESET else ""
        print(f"{name:16s} channels {ch:26s} classes {cl:14s} {sm}{marker}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="labreid", description="Interpretable person re-identification engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, encoder=True, labelmap=True, preset=True):
        if preset:
            p.add_argument("--preset", default=DEFAULT_PRESET, help="preset name or config path")
        if encoder:
            p.add_argument("--encoder", help="texture encoder weight file (default: analytic fallback)")
        if labelmap:
            p.add_argument("--labelmap", help="label mapping config (default: packaged LIP mapping)")

    p = sub.add_parser("index", help="build a feature store from an image+mask corpus")
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True, help="output .reidx path")
    p.add_argument("--strict", action="store_true", help="fail on the first bad image")
    add_common(p)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", help="search a store with a query image and mask")
    p.add_argument("--store", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--json", action="store_true", help="emit the structured response document")
    add_common(p)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("describe-search", help="search a store with a textual description")
    p.add_argument("--store", required=True)
    p.add_argument("--query-file", help="JSON description document")
    p.add_argument(
        "--term",
        action="append",
        help="region[:color=<name|L,a,b>][:texture=<class>], repeatable",
    )
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--json", action="store_true")
    add_common(p, encoder=False, labelmap=False)
    p.set_defaults(func=_cmd_describe_search)

    p = sub.add_parser("evaluate", help="run the re-id metrics on a Market1501-layout dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--preset", action="append", help="preset to evaluate, repeatable")
    p.add_argument("--report", help="write TSV report (+ figures) to this path")
    add_common(p, preset=False)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("serve", help="serve the HTTP search API over a store")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--images", help="image directory for item thumbnails")
    add_common(p, preset=False)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("presets", help="list packaged preset configurations")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_presets)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LabReidError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
