"""HTTP search API.

A thin read-only layer over a loaded FeatureStore: description search,
image search, item inspection, preset listing, and a health probe.  All
responses are JSON documents; errors carry a machine-readable code
mirroring the library's exception names.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path
from typing import Any

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image

from .engine import RankedResult
from .errors import (
    DecodeError,
    EmptyDescription,
    EmptyRegion,
    FingerprintMismatch,
    LabReidError,
    PatchTooSmall,
    UnknownColorName,
    UnknownLabel,
)
from .masks import LabelMapping, ParserClass
from .presets import DEFAULT_PRESET, list_presets, load_preset
from .query import description_from_document
from .store import FeatureStore, SearchResponse, search_by_description, search_by_image
from .texture import EncoderModel, LatentSpaceConfig, nearest_class

_STATUS_BY_ERROR: dict[type, int] = {
    EmptyDescription: 422,
    UnknownColorName: 422,
    FingerprintMismatch: 409,
    DecodeError: 400,
    UnknownLabel: 400,
    EmptyRegion: 422,
    PatchTooSmall: 422,
}

_MAX_TOP_K = 500
_THUMBNAIL_SIDE = 128


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def _ranked_to_doc(r: RankedResult) -> dict[str, Any]:
    return {
        "image_id": r.image_id,
        "score": r.s_tot,
        "used_regions": [c.config_name for c in r.used_regions],
        "breakdown": {c.config_name: s for c, s in r.breakdown.items()},
    }


def _search_to_doc(resp: SearchResponse, preset_name: str) -> dict[str, Any]:
    return {
        "results": [_ranked_to_doc(r) for r in resp.results],
        "max_score": resp.max_score,
        "query_regions": [c.config_name for c in resp.query_regions],
        "preset": preset_name,
    }


def _parse_top_k(raw: Any) -> int:
    try:
        top_k = int(raw)
    except (TypeError, ValueError):
        raise ValueError(f"top_k must be an integer, got {raw!r}") from None
    if not 1 <= top_k <= _MAX_TOP_K:
        raise ValueError(f"top_k must be in [1, {_MAX_TOP_K}], got {top_k}")
    return top_k


def _thumbnail_base64(path: Path) -> str | None:
    try:
        with Image.open(path) as img:
            img = img.convert("RGB")
            img.thumbnail((_THUMBNAIL_SIDE, _THUMBNAIL_SIDE))
            buf = io.BytesIO()
            img.save(buf, format="PNG")
        return base64.b64encode(buf.getvalue()).decode("ascii")
    except OSError:
        return None


def create_app(
    store: FeatureStore,
    images_dir: str | Path | None = None,
    encoder: EncoderModel | None = None,
    mapping: LabelMapping | None = None,
) -> FastAPI:
    """Application serving the given store.

    images_dir, when provided, is used to embed thumbnails in item
    responses; without it items carry feature summaries only.
    """
    app = FastAPI(title="labreid search service", docs_url=None, redoc_url=None)
    images_root = Path(images_dir) if images_dir is not None else None
    ls = LatentSpaceConfig.default()

    @app.exception_handler(LabReidError)
    async def _lab_error(request: Request, exc: LabReidError) -> JSONResponse:
        status = 400
        for etype, code in _STATUS_BY_ERROR.items():
            if isinstance(exc, etype):
                status = code
                break
        return _error_response(status, exc.code, str(exc))

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return _error_response(422, "validation_error", str(exc))

    @app.get("/health")
    async def health() -> dict[str, Any]:
        return {
            "status": "ok",
            "fingerprint": store.fingerprint,
            "encoder_version": store.encoder_version,
            "record_count": len(store),
        }

    @app.get("/presets")
    async def presets() -> dict[str, Any]:
        out = []
        for name in list_presets():
            p = load_preset(name)
            out.append(
                {
                    "name": name,
                    "channel_weights": dict(
                        zip(("L", "a", "b", "d", "t"), p.channel_weights.as_tuple())
                    ),
                    "class_weights": {c.config_name: w for c, w in p.class_weights.table.items()},
                    "smoothing": {
                        "filter_length": p.smoothing.filter_length,
                        "before_compression": p.smoothing.apply_before_compression,
                    },
                }
            )
        return {"presets": out, "default": DEFAULT_PRESET}

    @app.get("/items/{image_id}")
    async def item(image_id: str) -> Any:
        vec = store.get(image_id)
        if vec is None:
            return _error_response(404, "not_found", f"no indexed item {image_id!r}")
        regions = {}
        for cls_, feat in sorted(vec.regions.items(), key=lambda kv: int(kv[0])):
            doc: dict[str, Any] = {}
            if feat.color is not None:
                rep = feat.color.rep_color
                doc["representative_color"] = {"L": rep.L, "a": rep.a, "b": rep.b}
                doc["histogram_bits"] = {
                    "L": feat.color.hist_L.popcount,
                    "a": feat.color.hist_a.popcount,
                    "b": feat.color.hist_b.popcount,
                }
            if feat.texture is not None:
                doc["texture"] = {
                    "x": feat.texture.x,
                    "y": feat.texture.y,
                    "nearest_class": nearest_class(feat.texture, ls).value,
                }
            regions[cls_.config_name] = doc
        thumbnail = None
        if images_root is not None:
            for suffix in (".jpg", ".jpeg", ".png", ".bmp"):
                candidate = images_root / (image_id + suffix)
                if candidate.is_file():
                    thumbnail = _thumbnail_base64(candidate)
                    break
        return {"image_id": image_id, "regions": regions, "thumbnail_png_base64": thumbnail}

    @app.post("/search/description")
    async def search_description(request: Request) -> Any:
        try:
            body = await request.json()
        except Exception:
            return _error_response(400, "bad_json", "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error_response(400, "bad_json", "request body must be a JSON object")
        top_k = _parse_top_k(body.get("top_k", 10))
        preset_name = str(body.get("preset", DEFAULT_PRESET))
        dq = description_from_document(body)
        resp = search_by_description(store, dq, top_k=top_k, preset=preset_name)
        return _search_to_doc(resp, preset_name)

    @app.post("/search/image")
    async def search_image(
        image: UploadFile = File(...),
        mask: UploadFile = File(...),
        top_k: int = Form(10),
        preset: str = Form(DEFAULT_PRESET),
    ) -> Any:
        k = _parse_top_k(top_k)
        image_bytes = await image.read()
        mask_bytes = await mask.read()
        resp = search_by_image(
            store,
            image_bytes,
            mask_bytes,
            top_k=k,
            preset=preset,
            encoder=encoder,
            mapping=mapping,
        )
        return _search_to_doc(resp, preset)

    return app


def serve(
    store: FeatureStore,
    host: str = "127.0.0.1",
    port: int = 8000,
    images_dir: str | Path | None = None,
    encoder: EncoderModel | None = None,
    mapping: LabelMapping | None = None,
) -> None:
    """Run the API with uvicorn; blocks until interrupted."""
    import uvicorn

    app = create_app(store, images_dir=images_dir, encoder=encoder, mapping=mapping)
    uvicorn.run(app, host=host, port=port, log_level="info")
