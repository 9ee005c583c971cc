"""Interpretable person re-identification from parsed body regions.

Features are human-readable per-region color histograms, representative
Lab colors, and a 2D texture embedding; similarity is a weighted fusion
with tuned default weights.  See the README for the full tour.
"""

from .color import (
    BinaryHistogram64,
    ChannelHistogram256,
    DistanceConfig,
    RepresentativeColor,
    SmoothingConfig,
    binarize,
    build_histogram,
    channel_similarity,
    compress_histogram,
    distance_similarity,
    representative_color,
    rgb_to_lab,
    smooth_histogram,
)
from .engine import (
    ChannelWeights,
    ClassWeights,
    PackedGallery,
    PersonFeatureVector,
    RankedResult,
    RegionColorFeature,
    RegionFeatures,
    fuse_channels,
    max_achievable_score,
    rank_gallery,
    region_similarity,
    total_similarity,
)
from .errors import LabReidError
from .evaluate import MetricsReport, evaluate, load_dataset, run_evaluation
from .features import PipelineConfig, extract_features, extract_from_bytes
from .masks import LabelMapping, ParserClass, RegionMaskSet, load_mask
from .presets import DEFAULT_PRESET, Preset, list_presets, load_preset
from .query import ColorNameTable, DescriptionQuery, RegionTerm, build_query
from .store import (
    FeatureStore,
    SearchResponse,
    build_index,
    search_by_description,
    search_by_image,
)
from .texture import (
    EncoderModel,
    LatentSpaceConfig,
    TextureClass,
    TexturePoint,
    encode_texture,
    fallback_encoder,
    load_encoder,
    texture_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryHistogram64",
    "ChannelHistogram256",
    "ChannelWeights",
    "ClassWeights",
    "ColorNameTable",
    "DEFAULT_PRESET",
    "DescriptionQuery",
    "DistanceConfig",
    "EncoderModel",
    "FeatureStore",
    "LabReidError",
    "LabelMapping",
    "LatentSpaceConfig",
    "MetricsReport",
    "PackedGallery",
    "ParserClass",
    "PersonFeatureVector",
    "PipelineConfig",
    "Preset",
    "RankedResult",
    "RegionColorFeature",
    "RegionFeatures",
    "RegionMaskSet",
    "RegionTerm",
    "RepresentativeColor",
    "SearchResponse",
    "SmoothingConfig",
    "TextureClass",
    "TexturePoint",
    "binarize",
    "build_histogram",
    "build_index",
    "build_query",
    "channel_similarity",
    "compress_histogram",
    "distance_similarity",
    "encode_texture",
    "evaluate",
    "extract_features",
    "extract_from_bytes",
    "fallback_encoder",
    "fuse_channels",
    "list_presets",
    "load_dataset",
    "load_encoder",
    "load_mask",
    "load_preset",
    "max_achievable_score",
    "rank_gallery",
    "region_similarity",
    "representative_color",
    "rgb_to_lab",
    "run_evaluation",
    "search_by_description",
    "search_by_image",
    "smooth_histogram",
    "texture_similarity",
    "total_similarity",
]
