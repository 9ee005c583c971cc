"""Persistent feature index (.reidx) and the search entry points.

The store is a single little-endian binary file: magic, format version,
a canonical JSON header (fingerprint, encoder version, record count),
then one record per image sorted by image_id.  Binary histograms are
stored as the same 64-bit words the scoring popcounts operate on, and
floats as raw doubles, so a save/load round trip is bit-exact and
rebuilding from identical inputs yields a byte-identical file.
"""

from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .color import BinaryHistogram64, RepresentativeColor
from .engine import (
    ChannelWeights,
    ClassWeights,
    PackedGallery,
    PersonFeatureVector,
    RankedResult,
    RegionColorFeature,
    RegionFeatures,
    max_achievable_score,
)
from .errors import (
    DecodeError,
    EmptyCorpus,
    FingerprintMismatch,
    LabReidError,
    MissingMask,
)
from .features import PipelineConfig, extract_from_bytes
from .masks import LabelMapping, ParserClass
from .presets import Preset, load_preset
from .query import DescriptionQuery, build_query
from .texture import EncoderModel, TexturePoint, fallback_encoder

logger = logging.getLogger(__name__)

STORE_SUFFIX = ".reidx"

_MAGIC = b"RIDX"
_FORMAT_VERSION = 1
_FLAG_COLOR = 1
_FLAG_TEXTURE = 2

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp")


@dataclass
class FeatureStore:
    """Immutable index of feature vectors keyed by image_id."""

    fingerprint: str
    encoder_version: str
    vectors: list[PersonFeatureVector]
    _by_id: dict[str, PersonFeatureVector] = field(init=False, repr=False, compare=False)
    _packed: PackedGallery | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.vectors = sorted(self.vectors, key=lambda v: v.image_id)
        self._by_id = {}
        for v in self.vectors:
            if v.image_id in self._by_id:
                raise ValueError(f"duplicate image_id {v.image_id!r} in store")
            self._by_id[v.image_id] = v

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, image_id: str) -> PersonFeatureVector | None:
        return self._by_id.get(image_id)

    @property
    def packed(self) -> PackedGallery:
        if self._packed is None:
            self._packed = PackedGallery(self.vectors)
        return self._packed

    def save(self, path: str | Path) -> None:
        buf = io.BytesIO()
        buf.write(_MAGIC)
        buf.write(struct.pack("<I", _FORMAT_VERSION))
        header = json.dumps(
            {
                "encoder_version": self.encoder_version,
                "fingerprint": self.fingerprint,
                "format": _FORMAT_VERSION,
                "record_count": len(self.vectors),
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")
        buf.write(struct.pack("<I", len(header)))
        buf.write(header)
        for vec in self.vectors:
            ident = vec.image_id.encode("utf-8")
            buf.write(struct.pack("<H", len(ident)))
            buf.write(ident)
            regions = sorted(vec.regions, key=int)
            buf.write(struct.pack("<B", len(regions)))
            for cls_ in regions:
                feat = vec.regions[cls_]
                flags = (_FLAG_COLOR if feat.color else 0) | (
                    _FLAG_TEXTURE if feat.texture else 0
                )
                buf.write(struct.pack("<BB", int(cls_), flags))
                if feat.color:
                    buf.write(
                        struct.pack(
                            "<QQQ",
                            feat.color.hist_L.bits,
                            feat.color.hist_a.bits,
                            feat.color.hist_b.bits,
                        )
                    )
                    rep = feat.color.rep_color
                    buf.write(struct.pack("<ddd", rep.L, rep.a, rep.b))
                if feat.texture:
                    buf.write(struct.pack("<dd", feat.texture.x, feat.texture.y))
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "FeatureStore":
        source = str(path)
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise DecodeError(f"cannot read store {source}: {exc}") from exc
        view = io.BytesIO(data)

        def take(n: int, what: str) -> bytes:
            chunk = view.read(n)
            if len(chunk) != n:
                raise DecodeError(f"{source}: truncated while reading {what}")
            return chunk

        if take(4, "magic") != _MAGIC:
            raise DecodeError(f"{source}: bad magic, not a feature store")
        (version,) = struct.unpack("<I", take(4, "format version"))
        if version != _FORMAT_VERSION:
            raise DecodeError(f"{source}: unsupported store format version {version}")
        (header_len,) = struct.unpack("<I", take(4, "header length"))
        try:
            header = json.loads(take(header_len, "header").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DecodeError(f"{source}: bad header: {exc}") from exc
        vectors: list[PersonFeatureVector] = []
        for _ in range(int(header.get("record_count", 0))):
            (id_len,) = struct.unpack("<H", take(2, "image_id length"))
            image_id = take(id_len, "image_id").decode("utf-8")
            (region_count,) = struct.unpack("<B", take(1, "region count"))
            regions: dict[ParserClass, RegionFeatures] = {}
            for _ in range(region_count):
                cls_raw, flags = struct.unpack("<BB", take(2, f"{image_id}: region header"))
                cls_ = ParserClass(cls_raw)
                color = None
                texture = None
                if flags & _FLAG_COLOR:
                    wl, wa, wb = struct.unpack("<QQQ", take(24, f"{image_id}: histogram words"))
                    rl, ra, rb = struct.unpack("<ddd", take(24, f"{image_id}: rep color"))
                    color = RegionColorFeature(
                        hist_L=BinaryHistogram64(channel="L", bits=wl),
                        hist_a=BinaryHistogram64(channel="a", bits=wa),
                        hist_b=BinaryHistogram64(channel="b", bits=wb),
                        rep_color=RepresentativeColor(L=rl, a=ra, b=rb),
                    )
                if flags & _FLAG_TEXTURE:
                    x, y = struct.unpack("<dd", take(16, f"{image_id}: texture point"))
                    texture = TexturePoint(x=x, y=y)
                regions[cls_] = RegionFeatures(color=color, texture=texture)
            vectors.append(PersonFeatureVector(image_id=image_id, regions=regions))
        if view.read(1):
            raise DecodeError(f"{source}: trailing bytes after the last record")
        return cls(
            fingerprint=str(header.get("fingerprint", "")),
            encoder_version=str(header.get("encoder_version", "")),
            vectors=vectors,
        )


@dataclass(frozen=True)
class SearchResponse:
    """Ranked results plus the score ceiling for this query."""

    results: tuple[RankedResult, ...]
    max_score: float
    query_regions: tuple[ParserClass, ...]

    def __post_init__(self) -> None:
        scores = [r.s_tot for r in self.results]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("search results must be sorted by score descending")


def iter_corpus(images_dir: str | Path, masks_dir: str | Path):
    """(image_path, mask_path) pairs for every image in the corpus; the
    mask is the image's stem + .png inside masks_dir."""
    images_dir = Path(images_dir)
    masks_dir = Path(masks_dir)
    for path in sorted(images_dir.iterdir()):
        if path.suffix.lower() in _IMAGE_SUFFIXES:
            yield path, masks_dir / (path.stem + ".png")


def build_index(
    images_dir: str | Path,
    masks_dir: str | Path,
    cfg: PipelineConfig | None = None,
    encoder: EncoderModel | None = None,
    mapping: LabelMapping | None = None,
    strict: bool = False,
) -> FeatureStore:
    """Extract features for a whole corpus into a FeatureStore.

    Images without masks or failing extraction are logged and skipped
    (strict=True raises instead); an empty corpus or one where every
    image fails raises EmptyCorpus.
    """
    cfg = cfg or PipelineConfig()
    encoder = encoder or fallback_encoder(cfg.latent_space)
    mapping = mapping or LabelMapping.lip_default()
    images_dir = Path(images_dir)
    if not images_dir.is_dir():
        raise EmptyCorpus(f"image directory {images_dir} does not exist")
    vectors: list[PersonFeatureVector] = []
    total = 0
    skipped: list[str] = []
    for image_path, mask_path in iter_corpus(images_dir, masks_dir):
        total += 1
        try:
            if not mask_path.is_file():
                raise MissingMask(f"no mask for {image_path.name} (expected {mask_path})")
            vectors.append(
                extract_from_bytes(
                    image_path.read_bytes(),
                    mask_path.read_bytes(),
                    mapping,
                    cfg,
                    encoder,
                    image_id=image_path.stem,
                )
            )
        except (OSError, LabReidError) as exc:
            if strict:
                raise
            skipped.append(image_path.name)
            logger.warning("skipping %s: %s", image_path.name, exc)
    if total == 0:
        raise EmptyCorpus(f"no images found in {images_dir}")
    if not vectors:
        raise EmptyCorpus(f"all {total} images in {images_dir} failed feature extraction")
    if skipped:
        logger.warning("indexed %d of %d images (%d skipped)", len(vectors), total, len(skipped))
    return FeatureStore(
        fingerprint=cfg.fingerprint(encoder),
        encoder_version=encoder.version,
        vectors=vectors,
    )


def _check_fingerprint(store: FeatureStore, cfg: PipelineConfig, encoder: EncoderModel) -> None:
    active = cfg.fingerprint(encoder)
    if store.fingerprint != active:
        raise FingerprintMismatch(
            f"store was built with fingerprint {store.fingerprint[:12]}… but the active "
            f"configuration has {active[:12]}…; rebuild the index or match the preset"
        )


def search_by_image(
    store: FeatureStore,
    image_bytes: bytes,
    mask_bytes: bytes,
    top_k: int = 10,
    preset: Preset | str = "default",
    encoder: EncoderModel | None = None,
    mapping: LabelMapping | None = None,
) -> SearchResponse:
    """Rank the store against a query image + mask pair."""
    if isinstance(preset, str):
        preset = load_preset(preset)
    cfg = PipelineConfig.from_preset(preset)
    encoder = encoder or fallback_encoder(cfg.latent_space)
    _check_fingerprint(store, cfg, encoder)
    vec = extract_from_bytes(image_bytes, mask_bytes, mapping, cfg, encoder, image_id="<query>")
    results = store.packed.rank(
        vec,
        preset.class_weights,
        preset.channel_weights,
        top_k=top_k,
        distance_cfg=preset.distance,
        ls_cfg=cfg.latent_space,
    )
    return SearchResponse(
        results=tuple(results),
        max_score=max_achievable_score(vec, preset.class_weights),
        query_regions=tuple(c for c in vec.regions),
    )


def search_by_description(
    store: FeatureStore,
    dq: DescriptionQuery,
    top_k: int = 10,
    preset: Preset | str = "default",
) -> SearchResponse:
    """Rank the store against a textual description.

    Description features do not depend on the extraction pipeline, so
    any store fingerprint is acceptable; the preset supplies weights and
    the distance threshold (channel weights may be overridden by the
    query itself, e.g. texture-only searches)."""
    if isinstance(preset, str):
        preset = load_preset(preset)
    cfg = PipelineConfig.from_preset(preset)
    vec, chw, _ = build_query(dq, ls=cfg.latent_space)
    if dq.channel_weights is None and dq.has_color_terms:
        chw = preset.channel_weights
    results = store.packed.rank(
        vec,
        preset.class_weights,
        chw,
        top_k=top_k,
        distance_cfg=preset.distance,
        ls_cfg=cfg.latent_space,
    )
    return SearchResponse(
        results=tuple(results),
        max_score=max_achievable_score(vec, preset.class_weights),
        query_regions=tuple(c for c in vec.regions),
    )
