"""Texture feature channel.

An upper-clothes patch is embedded as a point in a pre-configured 2-D
latent space whose five cluster centers correspond to the texture classes
(uniform, horizontal lines, vertical lines, checkered, dots).  Distances
to the centers yield a class-similarity vector via an unnormalized
Gaussian kernel, and two textures are compared by the cosine of their
class-similarity vectors, so two points deep inside the same cluster
score close to 1 even when they are far apart in raw coordinates.

Embeddings come either from a trained encoder loaded from a weight file
or from the analytic fallback encoder, which derives the point from
directional-gradient and phase-balance statistics and needs no weights.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .config import parse_config_text, read_config
from .errors import ConfigError, ModelLoadError, PatchTooSmall

FALLBACK_VERSION = "fallback-v1"

_DEFAULT_LS: "LatentSpaceConfig | None" = None

# Fallback statistics: gradient activity saturates at this RMS level, and
# the minority-phase fraction separating dots from checkered patterns is
# ramped over [0.125, 0.375].
_ACTIVITY_SCALE = 0.05
_PHASE_LOW = 0.125
_PHASE_HIGH = 0.375


class TextureClass(Enum):
    UNIFORM = "uniform"
    HORIZONTAL_LINES = "horizontal_lines"
    VERTICAL_LINES = "vertical_lines"
    CHECKERED = "checkered"
    DOTS = "dots"

    @classmethod
    def from_name(cls, name: str) -> "TextureClass":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown texture class {name!r}") from None


TEXTURE_CLASS_ORDER: tuple[TextureClass, ...] = tuple(TextureClass)


@dataclass(frozen=True)
class TexturePoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"texture point must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class LatentSpaceConfig:
    """Five named cluster centers plus the kernel width."""

    centers: dict[TextureClass, tuple[float, float]]
    kernel_sigma: float

    def __post_init__(self) -> None:
        if set(self.centers) != set(TextureClass):
            missing = [c.value for c in TextureClass if c not in self.centers]
            raise ConfigError(f"latent space must define all five centers; missing {missing}")
        pts = [self.centers[c] for c in TEXTURE_CLASS_ORDER]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if math.dist(pts[i], pts[j]) <= 0.0:
                    raise ConfigError("latent space centers must be pairwise distinct")
        if not self.kernel_sigma > 0:
            raise ConfigError(f"kernel_sigma must be positive, got {self.kernel_sigma}")

    def center_array(self) -> np.ndarray:
        return np.array([self.centers[c] for c in TEXTURE_CLASS_ORDER], dtype=np.float64)

    def center_of(self, cls: TextureClass) -> TexturePoint:
        x, y = self.centers[cls]
        return TexturePoint(x=x, y=y)

    @classmethod
    def _from_doc(cls, doc) -> "LatentSpaceConfig":
        centers: dict[TextureClass, tuple[float, float]] = {}
        sigma: float | None = None
        for entry in doc.entries:
            if entry[0] == "center" and len(entry) == 4:
                centers[TextureClass.from_name(entry[1])] = (float(entry[2]), float(entry[3]))
            elif entry[0] == "kernel_sigma" and len(entry) == 2:
                sigma = float(entry[1])
            else:
                raise ConfigError(f"{doc.source}: bad latent-space line {' '.join(entry)!r}")
        if sigma is None:
            raise ConfigError(f"{doc.source}: kernel_sigma missing")
        return cls(centers=centers, kernel_sigma=sigma)

    @classmethod
    def from_file(cls, path: str | Path) -> "LatentSpaceConfig":
        return cls._from_doc(read_config(path, "latentspace"))

    @classmethod
    def default(cls) -> "LatentSpaceConfig":
        global _DEFAULT_LS
        if _DEFAULT_LS is None:
            text = resources.files("labreid.data").joinpath("latent_space.conf").read_text("utf-8")
            _DEFAULT_LS = cls._from_doc(
                parse_config_text(text, "latentspace", source="latent_space.conf")
            )
        return _DEFAULT_LS


def class_similarity_vector(p: TexturePoint, cfg: LatentSpaceConfig) -> np.ndarray:
    """Per-class similarities exp(-d^2 / (2 sigma^2)) in TEXTURE_CLASS_ORDER.

    Components are strictly positive and decrease with distance to the
    respective center; no normalization is applied across classes.
    """
    centers = cfg.center_array()
    dx = p.x - centers[:, 0]
    dy = p.y - centers[:, 1]
    return np.exp(-(dx * dx + dy * dy) / (2.0 * cfg.kernel_sigma**2))


def texture_similarity(p1: TexturePoint, p2: TexturePoint, cfg: LatentSpaceConfig) -> float:
    """Cosine similarity of the two class-similarity vectors, in (0, 1]."""
    v1 = class_similarity_vector(p1, cfg).tolist()
    v2 = class_similarity_vector(p2, cfg).tolist()
    # Accumulate term by term in class order; batch scoring mirrors this
    # exactly so both code paths produce bit-identical values.
    dot = 0.0
    n1 = 0.0
    n2 = 0.0
    for a, b in zip(v1, v2):
        dot += a * b
        n1 += a * a
        n2 += b * b
    return dot / math.sqrt(n1 * n2)


@dataclass(frozen=True)
class DenseLayer:
    name: str
    weights: np.ndarray  # (out_dim, in_dim) float32
    bias: np.ndarray  # (out_dim,) float32


@dataclass(frozen=True)
class EncoderModel:
    """Texture encoder: either a stack of dense layers loaded from a weight
    file, or the analytic fallback (empty layer tuple) bound to a latent
    space geometry.  Encoding is deterministic for fixed weights/geometry.
    """

    version: str
    input_side: int
    layers: tuple[DenseLayer, ...]
    fallback_centers: np.ndarray | None = None

    @property
    def is_fallback(self) -> bool:
        return not self.layers


def fallback_encoder(ls: LatentSpaceConfig | None = None, input_side: int = 64) -> EncoderModel:
    """Analytic encoder mapping patch statistics onto the configured centers."""
    ls = ls or LatentSpaceConfig.default()
    return EncoderModel(
        version=FALLBACK_VERSION,
        input_side=input_side,
        layers=(),
        fallback_centers=ls.center_array(),
    )


_MAGIC = b"TENC"
_FORMAT_VERSION = 1


def save_encoder(model: EncoderModel, path: str | Path) -> None:
    """Write a layered encoder to the versioned binary weight container."""
    if model.is_fallback:
        raise ValueError("the fallback encoder has no weights to save")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", _FORMAT_VERSION))
    buf.write(model.version.encode("utf-8")[:16].ljust(16, b"\x00"))
    buf.write(struct.pack("<II", model.input_side, len(model.layers)))
    for layer in model.layers:
        name = layer.name.encode("utf-8")
        out_dim, in_dim = layer.weights.shape
        buf.write(struct.pack("<H", len(name)))
        buf.write(name)
        buf.write(struct.pack("<II", in_dim, out_dim))
        buf.write(layer.weights.astype("<f4").tobytes())
        buf.write(layer.bias.astype("<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelLoadError(f"{self.source}: truncated while reading {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_encoder(path: str | Path) -> EncoderModel:
    """Load an encoder weight file, validating magic, version, and layer
    shapes; failures raise ModelLoadError naming the offending layer."""
    source = str(path)
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ModelLoadError(f"cannot read encoder file {source}: {exc}") from exc
    r = _Reader(data, source)
    if r.take(4, "magic") != _MAGIC:
        raise ModelLoadError(f"{source}: bad magic, not an encoder weight file")
    (fmt_version,) = r.unpack("<I", "format version")
    if fmt_version != _FORMAT_VERSION:
        raise ModelLoadError(f"{source}: unsupported format version {fmt_version}")
    version = r.take(16, "version tag").rstrip(b"\x00").decode("utf-8", "replace")
    input_side, layer_count = r.unpack("<II", "layer table header")
    if input_side < 8 or layer_count == 0:
        raise ModelLoadError(f"{source}: implausible header (side={input_side}, layers={layer_count})")
    layers: list[DenseLayer] = []
    expected_in = input_side * input_side
    for i in range(layer_count):
        (name_len,) = r.unpack("<H", f"layer {i} name length")
        name = r.take(name_len, f"layer {i} name").decode("utf-8", "replace")
        in_dim, out_dim = r.unpack("<II", f"layer {name!r} dims")
        if in_dim != expected_in:
            raise ModelLoadError(
                f"{source}: layer {name!r} expects {in_dim} inputs but the previous "
                f"layer produces {expected_in}"
            )
        if out_dim == 0:
            raise ModelLoadError(f"{source}: layer {name!r} has zero outputs")
        w = np.frombuffer(
            r.take(4 * in_dim * out_dim, f"layer {name!r} weights"), dtype="<f4"
        ).reshape(out_dim, in_dim)
        b = np.frombuffer(r.take(4 * out_dim, f"layer {name!r} bias"), dtype="<f4")
        layers.append(DenseLayer(name=name, weights=w, bias=b))
        expected_in = out_dim
    if r.pos != len(data):
        raise ModelLoadError(f"{source}: {len(data) - r.pos} trailing bytes after layer table")
    if expected_in != 2:
        raise ModelLoadError(
            f"{source}: final layer {layers[-1].name!r} outputs {expected_in} values, expected 2"
        )
    return EncoderModel(version=version or "unversioned", input_side=input_side, layers=tuple(layers))


def _resample(patch: np.ndarray, side: int) -> np.ndarray:
    if patch.shape == (side, side):
        return patch.astype(np.float64)
    img = Image.fromarray(np.clip(patch, 0, 255).astype(np.uint8), mode="L")
    return np.asarray(img.resize((side, side), Image.BILINEAR), dtype=np.float64)


def _box3(patch: np.ndarray) -> np.ndarray:
    padded = np.pad(patch, 1, mode="edge")
    acc = np.zeros_like(patch)
    for dy in range(3):
        for dx in range(3):
            acc += padded[dy : dy + patch.shape[0], dx : dx + patch.shape[1]]
    return acc / 9.0


def _fallback_point(patch01: np.ndarray, centers: np.ndarray) -> tuple[float, float]:
    # Gradient statistics are taken on a lightly blurred patch at its raw
    # contrast, so pixel noise on flat clothing reads as low activity;
    # only the phase statistics are contrast-normalized.
    smoothed = _box3(patch01)
    lo = float(smoothed.min())
    rng = float(smoothed.max()) - lo
    if rng < 1e-6:
        return float(centers[0, 0]), float(centers[0, 1])
    z = (smoothed - lo) / rng
    gx = np.diff(smoothed, axis=1)
    gy = np.diff(smoothed, axis=0)
    ex = float(np.mean(gx * gx))
    ey = float(np.mean(gy * gy))
    activity = min(1.0, math.sqrt(ex + ey) / _ACTIVITY_SCALE)
    direction = (ey - ex) / (ex + ey) if ex + ey > 0 else 0.0
    isotropy = 1.0 - abs(direction)
    bright = float(np.mean(z > 0.5))
    minority = min(bright, 1.0 - bright)
    ramp = (minority - _PHASE_LOW) / (_PHASE_HIGH - _PHASE_LOW)
    scores = np.array(
        [
            1.0 - activity,
            activity * max(direction, 0.0),
            activity * max(-direction, 0.0),
            activity * isotropy * min(max(ramp, 0.0), 1.0),
            activity * isotropy * min(max(1.0 - ramp, 0.0), 1.0),
        ]
    )
    total = float(scores.sum())
    if total <= 0:
        return float(centers[0, 0]), float(centers[0, 1])
    point = scores @ centers / total
    return float(point[0]), float(point[1])


def encode_texture(patch: np.ndarray, model: EncoderModel) -> TexturePoint:
    """Embed a grayscale patch as a latent-space point.

    The patch is resampled to the model's input size; sources smaller than
    8x8 raise PatchTooSmall.
    """
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale patch, got shape {patch.shape}")
    if min(patch.shape) < 8:
        raise PatchTooSmall(f"patch is {patch.shape[1]}x{patch.shape[0]}, minimum is 8x8")
    resampled = _resample(patch, model.input_side) / 255.0
    if model.is_fallback:
        x, y = _fallback_point(resampled, model.fallback_centers)
        return TexturePoint(x=x, y=y)
    vec = resampled.reshape(-1).astype(np.float32)
    for layer in model.layers[:-1]:
        vec = np.tanh(layer.weights @ vec + layer.bias)
    last = model.layers[-1]
    out = last.weights @ vec + last.bias
    return TexturePoint(x=float(out[0]), y=float(out[1]))


def nearest_class(p: TexturePoint, cfg: LatentSpaceConfig) -> TextureClass:
    """Texture class whose center is closest to the point."""
    centers = cfg.center_array()
    d2 = (centers[:, 0] - p.x) ** 2 + (centers[:, 1] - p.y) ** 2
    return TEXTURE_CLASS_ORDER[int(np.argmin(d2))]


def extract_texture_patch(image: np.ndarray, region_mask: np.ndarray, side: int = 64) -> np.ndarray:
    """Cut the region's bounding box out of an RGB image as a square
    grayscale patch.

    Pixels inside the box but outside the mask are filled with the
    region's mean intensity so surrounding clothing does not leak into
    the texture statistics.  Raises PatchTooSmall when the bounding box
    is under 8 pixels on either axis.
    """
    if image.shape[:2] != region_mask.shape:
        raise ValueError(
            f"image {image.shape[:2]} and mask {region_mask.shape} disagree"
        )
    rows = np.flatnonzero(region_mask.any(axis=1))
    cols = np.flatnonzero(region_mask.any(axis=0))
    if rows.size == 0:
        raise PatchTooSmall("region mask is empty")
    r0, r1 = rows[0], rows[-1] + 1
    c0, c1 = cols[0], cols[-1] + 1
    if r1 - r0 < 8 or c1 - c0 < 8:
        raise PatchTooSmall(
            f"region bounding box is {c1 - c0}x{r1 - r0}, minimum is 8x8"
        )
    rgb = image[r0:r1, c0:c1].astype(np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    inside = region_mask[r0:r1, c0:c1]
    mean = float(gray[inside].mean())
    filled = np.where(inside, gray, mean)
    return _resample(filled, side)
