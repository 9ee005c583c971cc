"""Mask ingestion: decode person crops plus parser label masks and aggregate
raw parser labels into the six weighted region groups.

Masks are single-channel 8-bit PNGs with one raw parser label per pixel,
the de-facto interchange format of human-parsing tools.  A label mapping
config translates each raw label id into one of the region groups; the
packaged default covers the 20-label LIP palette.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .config import parse_config_text, read_config
from .errors import ConfigError, DecodeError, DimensionMismatch, UnknownLabel


class ParserClass(IntEnum):
    """Region groups used for weighting, plus background."""

    BACKGROUND = 0
    UPPER_CLOTHES = 1
    PANTS = 2
    HAIR = 3
    GLOVES_BOOTS = 4
    LEGS = 5
    OTHER = 6

    @property
    def config_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "ParserClass":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ConfigError(f"unknown parser class name {name!r}") from None


#: The six non-background groups in their canonical (weight-table) order.
WEIGHTED_CLASSES: tuple[ParserClass, ...] = (
    ParserClass.UPPER_CLOTHES,
    ParserClass.PANTS,
    ParserClass.HAIR,
    ParserClass.GLOVES_BOOTS,
    ParserClass.LEGS,
    ParserClass.OTHER,
)


@dataclass(frozen=True)
class LabelMapping:
    """Total map from raw parser label id to region group.

    Totality over the configured palette is enforced here, at load time;
    mask pixels carrying ids outside the palette raise UnknownLabel when
    the mask is ingested.
    """

    table: dict[int, ParserClass]

    def __post_init__(self) -> None:
        if not self.table:
            raise ConfigError("label mapping is empty")
        for raw in self.table:
            if not 0 <= raw <= 255:
                raise ConfigError(f"raw label id {raw} outside 8-bit range")

    @classmethod
    def _from_doc(cls, doc) -> "LabelMapping":
        table: dict[int, ParserClass] = {}
        for entry in doc.entries:
            if len(entry) != 2:
                raise ConfigError(f"{doc.source}: bad labelmap line {' '.join(entry)!r}")
            raw = int(entry[0])
            if raw in table:
                raise ConfigError(f"{doc.source}: duplicate raw label {raw}")
            table[raw] = ParserClass.from_name(entry[1])
        return cls(table=table)

    @classmethod
    def from_file(cls, path: str | Path) -> "LabelMapping":
        return cls._from_doc(read_config(path, "labelmap"))

    @classmethod
    def lip_default(cls) -> "LabelMapping":
        text = resources.files("labreid.data").joinpath("lip_labelmap.conf").read_text("utf-8")
        return cls._from_doc(parse_config_text(text, "labelmap", source="lip_labelmap.conf"))

    def lookup_array(self) -> np.ndarray:
        """256-entry uint8 LUT; 255 marks ids absent from the palette."""
        lut = np.full(256, 255, dtype=np.uint8)
        for raw, group in self.table.items():
            lut[raw] = int(group)
        return lut


@dataclass(frozen=True)
class RegionMaskSet:
    """Per-pixel region groups for one crop.  ``labels`` holds ParserClass
    values and always matches the image dimensions."""

    image_id: str
    width: int
    height: int
    labels: np.ndarray  # (height, width) uint8 of ParserClass values

    def mask_for(self, group: ParserClass) -> np.ndarray:
        return self.labels == int(group)

    def pixel_count(self, group: ParserClass) -> int:
        return int(np.count_nonzero(self.labels == int(group)))

    def present_classes(self, min_pixels: int = 1) -> tuple[ParserClass, ...]:
        return tuple(g for g in WEIGHTED_CLASSES if self.pixel_count(g) >= min_pixels)


def decode_image(image_bytes: bytes) -> np.ndarray:
    """Decode image bytes to an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc


def _decode_mask(mask_bytes: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(mask_bytes)) as img:
            if img.mode not in ("L", "P"):
                raise DecodeError(
                    f"mask must be a single-channel 8-bit image, got mode {img.mode!r}"
                )
            return np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode mask: {exc}") from exc


def load_mask(
    image: bytes | np.ndarray,
    mask_bytes: bytes,
    mapping: LabelMapping,
    image_id: str = "",
) -> RegionMaskSet:
    """Decode a mask, check it against the crop dimensions, and aggregate raw
    parser labels into region groups.

    ``image`` may be the raw image bytes or an already-decoded (H, W, 3)
    array; only its dimensions are consulted here.
    """
    if isinstance(image, (bytes, bytearray)):
        img = decode_image(bytes(image))
    else:
        img = np.asarray(image)
    raw = _decode_mask(mask_bytes)
    if raw.shape[:2] != img.shape[:2]:
        raise DimensionMismatch(
            f"mask is {raw.shape[1]}x{raw.shape[0]} but image is "
            f"{img.shape[1]}x{img.shape[0]}"
        )
    lut = mapping.lookup_array()
    labels = lut[raw]
    if (labels == 255).any():
        bad = sorted(int(v) for v in np.unique(raw[labels == 255]))
        raise UnknownLabel(f"mask contains raw labels absent from the mapping: {bad}")
    return RegionMaskSet(
        image_id=image_id,
        width=int(raw.shape[1]),
        height=int(raw.shape[0]),
        labels=labels,
    )


def region_pixels(masks: RegionMaskSet, image: np.ndarray, group: ParserClass) -> np.ndarray:
    """RGB values of the pixels belonging to ``group``, as an (N, 3) array.

    Absent regions yield an empty (0, 3) array.
    """
    if group == ParserClass.BACKGROUND:
        raise ValueError("region_pixels is defined for non-background classes only")
    image = np.asarray(image)
    if image.shape[:2] != (masks.height, masks.width):
        raise DimensionMismatch(
            f"image is {image.shape[1]}x{image.shape[0]} but mask set is "
            f"{masks.width}x{masks.height}"
        )
    return image[masks.mask_for(group)].reshape(-1, 3)
