"""Re-identification evaluation on a Market1501-layout dataset.

Implements the standard single-query protocol: per query, gallery
entries sharing both person and camera with the query are excluded, junk
entries (person_id -1) are ignored, and CMC rank-k plus mean average
precision are computed over the filtered ranking.  Queries that lose all
their positives are skipped.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .engine import PackedGallery, PersonFeatureVector
from .errors import (
    FilenameParseError,
    LabReidError,
    LayoutError,
    NoValidQueries,
)
from .features import PipelineConfig, extract_from_bytes
from .masks import LabelMapping
from .presets import Preset, load_preset
from .texture import EncoderModel, fallback_encoder

logger = logging.getLogger(__name__)

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp")
_NAME_RE = re.compile(r"^(-?\d+)_c(\d+)")


@dataclass(frozen=True)
class AnnotatedImage:
    """One dataset entry with identity and camera parsed from its name."""

    image_id: str
    person_id: int
    camera_id: int
    split: str
    path: Path

    @property
    def is_junk(self) -> bool:
        return self.person_id == -1


@dataclass(frozen=True)
class MetricsReport:
    rank_1: float
    rank_10: float
    mean_ap: float
    num_queries: int
    fingerprint: str = ""
    preset: str = ""

    def row(self) -> str:
        """One machine-readable line: preset, metrics to one decimal, count."""
        name = self.preset or "-"
        return (
            f"{name}\t{self.rank_1:.1f}\t{self.rank_10:.1f}\t"
            f"{self.mean_ap:.1f}\t{self.num_queries}"
        )


def parse_image_name(name: str) -> tuple[int, int]:
    """(person_id, camera_id) from a `personID_cXsY_...` style filename."""
    m = _NAME_RE.match(name)
    if not m:
        raise FilenameParseError(f"cannot parse identity/camera from {name!r}")
    return int(m.group(1)), int(m.group(2))


def _scan_split(directory: Path, split: str) -> list[AnnotatedImage]:
    if not directory.is_dir():
        raise LayoutError(f"missing dataset directory {directory}")
    entries: list[AnnotatedImage] = []
    bad: list[str] = []
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        try:
            pid, cam = parse_image_name(path.name)
        except FilenameParseError:
            bad.append(path.name)
            continue
        entries.append(
            AnnotatedImage(
                image_id=path.stem, person_id=pid, camera_id=cam, split=split, path=path
            )
        )
    if bad:
        raise FilenameParseError(
            f"{directory}: {len(bad)} unparseable filenames: {', '.join(sorted(bad))}"
        )
    if not entries:
        raise LayoutError(f"no images found in {directory}")
    return entries


def load_dataset(root_dir: str | Path) -> tuple[list[AnnotatedImage], list[AnnotatedImage]]:
    """Annotated (queries, gallery) from the query/ and bounding_box_test/
    subdirectories of a Market1501-layout tree."""
    root = Path(root_dir)
    if not root.is_dir():
        raise LayoutError(f"dataset root {root} is not a directory")
    queries = _scan_split(root / "query", "query")
    gallery = _scan_split(root / "bounding_box_test", "gallery")
    return queries, gallery


def average_precision(positive_ranks: Sequence[int]) -> float:
    """AP from the 1-indexed ranks of the positives in a filtered ranking.

    The j-th best positive at rank r contributes j/r; the sum is divided
    by the number of positives.
    """
    if not positive_ranks:
        return 0.0
    total = 0.0
    for j, rank in enumerate(sorted(positive_ranks), start=1):
        total += j / rank
    return total / len(positive_ranks)


def evaluate(
    queries: Sequence[AnnotatedImage],
    gallery: Sequence[AnnotatedImage],
    rank_fn: Callable[[AnnotatedImage], Sequence[str]],
    fingerprint: str = "",
    preset: str = "",
) -> MetricsReport:
    """Metrics over all usable queries.

    rank_fn must return gallery image_ids best first, covering every
    gallery entry it could score; ids missing from the returned ranking
    are treated as unranked and ignored.  Junk queries and queries with
    no cross-camera positive are skipped; if nothing remains the dataset
    cannot be evaluated and NoValidQueries is raised.
    """
    by_id = {g.image_id: g for g in gallery}
    hits1 = 0
    hits10 = 0
    ap_sum = 0.0
    used = 0
    for q in queries:
        if q.is_junk:
            continue
        has_positive = any(
            not g.is_junk and g.person_id == q.person_id and g.camera_id != q.camera_id
            for g in gallery
        )
        if not has_positive:
            continue
        positive_ranks: list[int] = []
        rank = 0
        for image_id in rank_fn(q):
            g = by_id.get(image_id)
            if g is None or g.is_junk:
                continue
            if g.person_id == q.person_id and g.camera_id == q.camera_id:
                continue
            rank += 1
            if g.person_id == q.person_id:
                positive_ranks.append(rank)
        if not positive_ranks:
            # The ranking did not cover any positive (e.g. features missing
            # for every positive image); the query carries no signal.
            continue
        used += 1
        if positive_ranks[0] <= 1:
            hits1 += 1
        if positive_ranks[0] <= 10:
            hits10 += 1
        ap_sum += average_precision(positive_ranks)
    if used == 0:
        raise NoValidQueries("every query lost all its positives under the protocol")
    return MetricsReport(
        rank_1=100.0 * hits1 / used,
        rank_10=100.0 * hits10 / used,
        mean_ap=100.0 * ap_sum / used,
        num_queries=used,
        fingerprint=fingerprint,
        preset=preset,
    )


def _mask_path_for(image_path: Path, masks_dir: Path) -> Path:
    return masks_dir / (image_path.stem + ".png")


def extract_dataset_features(
    entries: Sequence[AnnotatedImage],
    masks_dir: str | Path,
    cfg: PipelineConfig,
    encoder: EncoderModel,
    mapping: LabelMapping | None = None,
) -> dict[str, PersonFeatureVector]:
    """Feature vectors for every entry whose image and mask both load.

    Failures are logged and skipped; the caller sees only the survivors.
    """
    masks_dir = Path(masks_dir)
    mapping = mapping or LabelMapping.lip_default()
    vectors: dict[str, PersonFeatureVector] = {}
    skipped = 0
    for entry in entries:
        mask_path = _mask_path_for(entry.path, masks_dir)
        try:
            vectors[entry.image_id] = extract_from_bytes(
                entry.path.read_bytes(),
                mask_path.read_bytes(),
                mapping,
                cfg,
                encoder,
                image_id=entry.image_id,
            )
        except (OSError, LabReidError) as exc:
            skipped += 1
            logger.warning("skipping %s: %s", entry.image_id, exc)
    if skipped:
        logger.warning("extraction skipped %d of %d images", skipped, len(entries))
    return vectors


def run_evaluation(
    dataset_root: str | Path,
    masks_dir: str | Path,
    preset: Preset | str = "default",
    encoder: EncoderModel | None = None,
    mapping: LabelMapping | None = None,
) -> MetricsReport:
    """Evaluate one preset end to end on an on-disk dataset."""
    if isinstance(preset, str):
        preset = load_preset(preset)
    cfg = PipelineConfig.from_preset(preset)
    encoder = encoder or fallback_encoder(cfg.latent_space)
    queries, gallery = load_dataset(dataset_root)
    q_vecs = extract_dataset_features(queries, masks_dir, cfg, encoder, mapping)
    g_vecs = extract_dataset_features(gallery, masks_dir, cfg, encoder, mapping)
    return _evaluate_vectors(queries, gallery, q_vecs, g_vecs, preset, cfg, encoder)


def _evaluate_vectors(
    queries: Sequence[AnnotatedImage],
    gallery: Sequence[AnnotatedImage],
    q_vecs: dict[str, PersonFeatureVector],
    g_vecs: dict[str, PersonFeatureVector],
    preset: Preset,
    cfg: PipelineConfig,
    encoder: EncoderModel,
) -> MetricsReport:
    ranked_gallery = [g for g in gallery if g.image_id in g_vecs]
    packed = PackedGallery([g_vecs[g.image_id] for g in ranked_gallery])

    def rank_fn(q: AnnotatedImage) -> Sequence[str]:
        vec = q_vecs.get(q.image_id)
        if vec is None:
            return ()
        scores, _ = packed.score(
            vec,
            preset.class_weights,
            preset.channel_weights,
            distance_cfg=preset.distance,
            ls_cfg=cfg.latent_space,
        )
        return packed.image_ids[packed.rank_order(scores)].tolist()

    return evaluate(
        queries,
        gallery,
        rank_fn,
        fingerprint=cfg.fingerprint(encoder),
        preset=preset.name,
    )


def ablation_sweep(
    dataset_root: str | Path,
    masks_dir: str | Path,
    preset_names: Sequence[str],
    encoder: EncoderModel | None = None,
    mapping: LabelMapping | None = None,
) -> list[MetricsReport]:
    """One MetricsReport per preset, extracting features once per distinct
    feature fingerprint."""
    queries, gallery = load_dataset(dataset_root)
    presets = [load_preset(name) for name in preset_names]
    reports: list[MetricsReport] = []
    cache: dict[str, tuple[dict, dict]] = {}
    for preset in presets:
        cfg = PipelineConfig.from_preset(preset)
        enc = encoder or fallback_encoder(cfg.latent_space)
        fp = cfg.fingerprint(enc)
        if fp not in cache:
            logger.info("extracting features for fingerprint %s (%s)", fp[:12], preset.name)
            cache[fp] = (
                extract_dataset_features(queries, masks_dir, cfg, enc, mapping),
                extract_dataset_features(gallery, masks_dir, cfg, enc, mapping),
            )
        q_vecs, g_vecs = cache[fp]
        reports.append(_evaluate_vectors(queries, gallery, q_vecs, g_vecs, preset, cfg, enc))
    return reports
