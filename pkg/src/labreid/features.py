"""Feature extraction pipeline.

Turns one image plus its region mask into a PersonFeatureVector: per
region, three binary color histograms and a representative Lab color;
for upper clothes additionally a texture embedding.  The pipeline is
parameterized by a PipelineConfig whose feature-affecting part is
captured in a fingerprint, so a stored index can reject configurations
it was not built with.

Histogram smoothing is applied to the L channel only; the a and b
histograms are binarized unsmoothed.  L histograms are the noisiest in
practice and the packaged ablation presets only ever vary L-channel
smoothing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .color import (
    CHANNELS,
    SmoothingConfig,
    binarize,
    build_histogram,
    compress_histogram,
    representative_color,
    rgb_to_lab,
    smooth_histogram,
    uniform_smooth,
)
from .engine import PersonFeatureVector, RegionColorFeature, RegionFeatures
from .errors import EmptyRegion, PatchTooSmall
from .masks import (
    WEIGHTED_CLASSES,
    LabelMapping,
    ParserClass,
    RegionMaskSet,
    decode_image,
    load_mask,
    region_pixels,
)
from .presets import Preset
from .texture import (
    EncoderModel,
    LatentSpaceConfig,
    encode_texture,
    extract_texture_patch,
    fallback_encoder,
)

SMOOTHED_CHANNELS = ("L",)


@dataclass(frozen=True)
class PipelineConfig:
    """Feature-affecting extraction parameters.

    Channel weights, class weights, and the distance threshold are
    scoring-time knobs and deliberately not part of this config, so
    presets that differ only in weights share one index.
    """

    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    binarize_factor: float = 1.0
    latent_space: LatentSpaceConfig = field(default_factory=LatentSpaceConfig.default)

    def __post_init__(self) -> None:
        if not self.binarize_factor > 0:
            raise ValueError(f"binarize_factor must be positive, got {self.binarize_factor}")

    @classmethod
    def from_preset(cls, preset: Preset, latent_space: LatentSpaceConfig | None = None) -> "PipelineConfig":
        return cls(
            smoothing=preset.smoothing,
            binarize_factor=preset.binarize_factor,
            latent_space=latent_space or LatentSpaceConfig.default(),
        )

    def fingerprint(self, encoder: EncoderModel) -> str:
        """Hex digest identifying every parameter that changes stored
        features.  Two configs with equal fingerprints produce identical
        vectors for identical inputs."""
        doc = {
            "format": 1,
            "binarize_factor": self.binarize_factor,
            "smoothing": {
                "filter_length": self.smoothing.filter_length,
                "before_compression": self.smoothing.apply_before_compression,
            },
            "smoothed_channels": list(SMOOTHED_CHANNELS),
            "latent_space": {
                "centers": {c.value: list(xy) for c, xy in self.latent_space.centers.items()},
                "kernel_sigma": self.latent_space.kernel_sigma,
            },
            "encoder": {"version": encoder.version, "input_side": encoder.input_side},
        }
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def binary_histograms(pixels_lab: np.ndarray, cfg: PipelineConfig):
    """The three per-channel binary histograms for one region's pixels."""
    out = []
    for channel in CHANNELS:
        h256 = build_histogram(pixels_lab, channel)
        smooth = channel in SMOOTHED_CHANNELS and cfg.smoothing.filter_length > 1
        if smooth and cfg.smoothing.apply_before_compression:
            h256 = smooth_histogram(h256, cfg.smoothing)
        h64 = compress_histogram(h256)
        if smooth and not cfg.smoothing.apply_before_compression:
            h64 = uniform_smooth(h64, cfg.smoothing.filter_length)
        out.append(binarize(h64, cfg.binarize_factor, channel=channel))
    return tuple(out)


def extract_features(
    image: np.ndarray,
    masks: RegionMaskSet,
    cfg: PipelineConfig | None = None,
    encoder: EncoderModel | None = None,
) -> PersonFeatureVector:
    """Full feature vector for one image.

    Regions with no pixels are simply absent from the result.  An upper
    clothes region too small for a texture patch keeps its color
    features and carries no texture point.  Raises EmptyRegion when the
    mask contains no foreground at all.
    """
    cfg = cfg or PipelineConfig()
    encoder = encoder or fallback_encoder(cfg.latent_space)
    regions: dict[ParserClass, RegionFeatures] = {}
    for cls_ in WEIGHTED_CLASSES:
        if cls_ not in masks.present_classes():
            continue
        pixels = region_pixels(masks, image, cls_)
        lab = rgb_to_lab(pixels)
        hist_l, hist_a, hist_b = binary_histograms(lab, cfg)
        color = RegionColorFeature(
            hist_L=hist_l, hist_a=hist_a, hist_b=hist_b, rep_color=representative_color(lab)
        )
        texture = None
        if cls_ is ParserClass.UPPER_CLOTHES:
            try:
                patch = extract_texture_patch(
                    image, masks.mask_for(cls_), side=encoder.input_side
                )
                texture = encode_texture(patch, encoder)
            except PatchTooSmall:
                texture = None
        regions[cls_] = RegionFeatures(color=color, texture=texture)
    if not regions:
        raise EmptyRegion(f"image {masks.image_id!r} has no foreground regions")
    return PersonFeatureVector(image_id=masks.image_id, regions=regions)


def extract_from_bytes(
    image_bytes: bytes,
    mask_bytes: bytes,
    mapping: LabelMapping | None = None,
    cfg: PipelineConfig | None = None,
    encoder: EncoderModel | None = None,
    image_id: str = "",
) -> PersonFeatureVector:
    """Decode raw image and mask files and extract features."""
    mapping = mapping or LabelMapping.lip_default()
    image = decode_image(image_bytes)
    masks = load_mask(image, mask_bytes, mapping, image_id=image_id)
    return extract_features(image, masks, cfg, encoder)
