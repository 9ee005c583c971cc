"""Build query feature vectors from textual person descriptions.

A description names colors and, for upper clothes, a texture per region
("white checkered upper clothes, black pants").  Color names resolve to
Lab triples through a vocabulary table and become binary histograms with
a small window of bits set around the color's bin, so a description can
be ranked against a gallery exactly like an extracted image would be.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .color import CHANNELS, BinaryHistogram64, RepresentativeColor
from .config import ConfigDoc, parse_config_text, read_config
from .engine import (
    ChannelWeights,
    ClassWeights,
    PersonFeatureVector,
    RegionColorFeature,
    RegionFeatures,
)
from .errors import ConfigError, EmptyDescription, UnknownColorName
from .masks import WEIGHTED_CLASSES, ParserClass
from .texture import LatentSpaceConfig, TextureClass, TexturePoint

DEFAULT_SPREAD = 2

TEXTURE_ONLY_WEIGHTS = ChannelWeights(w_L=0.0, w_a=0.0, w_b=0.0, w_d=0.0, w_t=1.0)


@dataclass(frozen=True)
class NamedColor:
    lab: tuple[float, float, float]
    spread: int = DEFAULT_SPREAD


@dataclass(frozen=True)
class ColorNameTable:
    colors: Mapping[str, NamedColor]

    def __post_init__(self) -> None:
        for name, color in self.colors.items():
            RepresentativeColor(*color.lab)  # gamut check
            if color.spread < 0:
                raise ConfigError(f"color {name!r}: spread must be non-negative")
        object.__setattr__(self, "colors", dict(self.colors))

    def lookup(self, name: str) -> NamedColor:
        key = name.strip().lower()
        if key not in self.colors:
            known = ", ".join(sorted(self.colors))
            raise UnknownColorName(f"unknown color name {name!r}; known names: {known}")
        return self.colors[key]

    @classmethod
    def _from_doc(cls, doc: ConfigDoc) -> "ColorNameTable":
        colors: dict[str, NamedColor] = {}
        for entry in doc.entries:
            if len(entry) not in (4, 5):
                raise ConfigError(f"{doc.source}: bad color line {' '.join(entry)!r}")
            name = entry[0].lower()
            try:
                lab = (float(entry[1]), float(entry[2]), float(entry[3]))
                spread = int(entry[4]) if len(entry) == 5 else DEFAULT_SPREAD
            except ValueError as exc:
                raise ConfigError(f"{doc.source}: {exc}") from None
            colors[name] = NamedColor(lab=lab, spread=spread)
        return cls(colors=colors)

    @classmethod
    def from_file(cls, path: str | Path) -> "ColorNameTable":
        return cls._from_doc(read_config(path, "colornames"))

    @classmethod
    def default(cls) -> "ColorNameTable":
        text = resources.files("labreid.data").joinpath("color_names.conf").read_text("utf-8")
        return cls._from_doc(parse_config_text(text, "colornames", source="color_names.conf"))


@dataclass(frozen=True)
class RegionTerm:
    """What the description says about one region."""

    color: str | tuple[float, float, float] | None = None
    texture: TextureClass | None = None

    def __post_init__(self) -> None:
        if self.color is None and self.texture is None:
            raise EmptyDescription("a region term needs a color or a texture")


@dataclass(frozen=True)
class DescriptionQuery:
    regions: Mapping[ParserClass, RegionTerm]
    channel_weights: ChannelWeights | None = None

    def __post_init__(self) -> None:
        if not self.regions:
            raise EmptyDescription("description names no regions")
        for cls_, term in self.regions.items():
            if cls_ not in WEIGHTED_CLASSES:
                raise ValueError(f"cannot describe region {cls_!r}")
            if term.texture is not None and cls_ is not ParserClass.UPPER_CLOTHES:
                raise ValueError(
                    f"texture can only be described for upper clothes, not {cls_.config_name}"
                )
        object.__setattr__(self, "regions", dict(self.regions))

    @property
    def has_color_terms(self) -> bool:
        return any(t.color is not None for t in self.regions.values())


def _scaled_component(value: float, channel: str) -> float:
    if channel == "L":
        return value * 2.55
    return value + 128.0


def color_bin_index(value: float, channel: str) -> int:
    """64-bin index of a described Lab component: nearest bin of the
    rescaled value, clamped to [0, 63]."""
    scaled = min(max(_scaled_component(value, channel), 0.0), 255.0)
    return min(max(int(math.floor(scaled / 4.0 + 0.5)), 0), 63)


def color_term_to_feature(
    term: str | tuple[float, float, float], table: ColorNameTable | None = None
) -> RegionColorFeature:
    """Color feature for one described region.

    The representative color is the term's Lab triple; each channel gets
    a window of bits set around the triple's bin so slight shade
    variation in the gallery still intersects the query.
    """
    table = table or ColorNameTable.default()
    if isinstance(term, str):
        named = table.lookup(term)
        lab, spread = named.lab, named.spread
    else:
        lab, spread = (float(term[0]), float(term[1]), float(term[2])), DEFAULT_SPREAD
    rep = RepresentativeColor(*lab)
    hists = []
    for channel, value in zip(CHANNELS, lab):
        center = color_bin_index(value, channel)
        lo = max(center - spread, 0)
        hi = min(center + spread, 63)
        bits = 0
        for k in range(lo, hi + 1):
            bits |= 1 << k
        hists.append(BinaryHistogram64(channel=channel, bits=bits))
    return RegionColorFeature(hist_L=hists[0], hist_a=hists[1], hist_b=hists[2], rep_color=rep)


def texture_term_to_point(cls_: TextureClass, ls: LatentSpaceConfig | None = None) -> TexturePoint:
    """A described texture embeds exactly at its class center."""
    ls = ls or LatentSpaceConfig.default()
    return ls.center_of(cls_)


def build_query(
    dq: DescriptionQuery,
    ls: LatentSpaceConfig | None = None,
    table: ColorNameTable | None = None,
) -> tuple[PersonFeatureVector, ChannelWeights, ClassWeights]:
    """Feature vector plus scoring weights for a description.

    A purely textural description is scored by the texture channel alone
    (w_t = 1); as soon as any color term is present the standard channel
    weights apply.  Class weights stay at their standard values; regions
    the description does not mention never enter the score because only
    regions present on both sides are compared.
    """
    ls = ls or LatentSpaceConfig.default()
    regions: dict[ParserClass, RegionFeatures] = {}
    for cls_, term in dq.regions.items():
        color = color_term_to_feature(term.color, table) if term.color is not None else None
        texture = texture_term_to_point(term.texture, ls) if term.texture is not None else None
        regions[cls_] = RegionFeatures(color=color, texture=texture)
    vector = PersonFeatureVector(image_id="<description>", regions=regions)
    if dq.channel_weights is not None:
        chw = dq.channel_weights
    elif dq.has_color_terms:
        chw = ChannelWeights.default()
    else:
        chw = TEXTURE_ONLY_WEIGHTS
    return vector, chw, ClassWeights.default()


def description_from_document(doc) -> DescriptionQuery:
    """Parse the documented request shape into a DescriptionQuery.

    Expected: {"regions": [{"region": name, "color": name | [L, a, b],
    "texture": name}, ...]}.  Raises EmptyDescription or ValueError on
    malformed documents; unknown color names surface later, at feature
    construction.
    """
    if not isinstance(doc, dict):
        raise ValueError("description must be an object")
    raw_regions = doc.get("regions")
    if not isinstance(raw_regions, list) or not raw_regions:
        raise EmptyDescription("description must list at least one region")
    regions: dict[ParserClass, RegionTerm] = {}
    for item in raw_regions:
        if not isinstance(item, dict) or "region" not in item:
            raise ValueError(f"bad region entry {item!r}")
        cls_ = ParserClass.from_name(str(item["region"]))
        color = item.get("color")
        if isinstance(color, (list, tuple)):
            if len(color) != 3:
                raise ValueError(f"explicit color needs three Lab components, got {color!r}")
            color = (float(color[0]), float(color[1]), float(color[2]))
        elif color is not None and not isinstance(color, str):
            raise ValueError(f"color must be a name or [L, a, b], got {color!r}")
        texture = item.get("texture")
        if texture is not None:
            texture = TextureClass.from_name(str(texture))
        if cls_ in regions:
            raise ValueError(f"region {cls_.config_name} described twice")
        regions[cls_] = RegionTerm(color=color, texture=texture)
    return DescriptionQuery(regions=regions)
