"""Color feature channel.

Region pixels are converted from sRGB to CIE-Lab (D65), histogrammed per
channel over 256 bins, smoothed with a 1-D uniform filter, compressed to
64 bins, and thresholded into binary histograms.  Two binary histograms
are compared by intersection over union of their set bits; a separate
``d`` channel scores the Lab Euclidean distance between representative
region colors.

Channel values are mapped to the 256-bin index range with a fixed affine
rescale (L x2.55, a/b +128) so bins stay comparable across images.
Histogram-building and representative-color functions take Lab values,
i.e. the output of :func:`rgb_to_lab` applied to region pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegion

CHANNELS = ("L", "a", "b")

# sRGB -> XYZ (D65, 2 degree observer) and the matching reference white.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])
_DELTA = 6.0 / 29.0


def rgb_to_lab(rgb) -> np.ndarray:
    """Convert 8-bit sRGB values to CIE-Lab under D65.

    Accepts a single (r, g, b) triple or any array whose last axis has
    size 3; returns float64 Lab values of the same shape.  L lies in
    [0, 100], a and b in roughly [-128, 127].
    """
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    if arr.shape[-1] != 3:
        raise ValueError(f"expected RGB triples on the last axis, got shape {arr.shape}")
    linear = np.where(arr > 0.04045, ((arr + 0.055) / 1.055) ** 2.4, arr / 12.92)
    xyz = linear @ _RGB_TO_XYZ.T / _WHITE
    f = np.where(xyz > _DELTA**3, np.cbrt(xyz), xyz / (3.0 * _DELTA**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    # The rounded standard constants place pure white a few 1e-6 above
    # L=100 and pure black a few 1e-15 below 0; clamp so every result
    # (and every mean of results) stays inside the nominal gamut.
    lab[..., 0] = np.clip(116.0 * f[..., 1] - 16.0, 0.0, 100.0)
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_bin_indices(lab: np.ndarray, channel: str) -> np.ndarray:
    """Map Lab channel values to 256-bin indices (floor of the affine rescale)."""
    lab = np.asarray(lab, dtype=np.float64)
    if channel == "L":
        scaled = lab[..., 0] * 2.55
    elif channel == "a":
        scaled = lab[..., 1] + 128.0
    elif channel == "b":
        scaled = lab[..., 2] + 128.0
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return np.clip(np.floor(scaled), 0, 255).astype(np.intp)


@dataclass(frozen=True)
class ChannelHistogram256:
    """256-bin histogram for one Lab channel.  Bins are raw counts when
    built and non-negative means after smoothing."""

    channel: str
    bins: np.ndarray  # (256,) float64

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.bins.shape != (256,):
            raise ValueError(f"expected 256 bins, got {self.bins.shape}")


@dataclass(frozen=True)
class BinaryHistogram64:
    """64 thresholded bins packed into one unsigned 64-bit word; bit k is
    bin k.  This is the stored and compared form of a color channel."""

    channel: str
    bits: int

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not 0 <= self.bits < (1 << 64):
            raise ValueError("bits must fit an unsigned 64-bit word")

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def to_bools(self) -> np.ndarray:
        return np.array([(self.bits >> k) & 1 for k in range(64)], dtype=bool)

    @classmethod
    def from_bools(cls, channel: str, flags) -> "BinaryHistogram64":
        word = 0
        for k, flag in enumerate(flags):
            if flag:
                word |= 1 << k
        return cls(channel=channel, bits=word)


@dataclass(frozen=True)
class SmoothingConfig:
    """Uniform-filter setup: odd window length and whether smoothing runs
    before the 256->64 compression.  filter_length 1 disables smoothing."""

    filter_length: int = 11
    apply_before_compression: bool = True

    def __post_init__(self) -> None:
        if self.filter_length < 1 or self.filter_length % 2 == 0:
            raise ValueError(f"filter_length must be odd and >= 1, got {self.filter_length}")


@dataclass(frozen=True)
class DistanceConfig:
    """Threshold for the distance channel, in Lab Euclidean units."""

    d_threshold: float = 40.0

    def __post_init__(self) -> None:
        if not self.d_threshold > 0:
            raise ValueError(f"d_threshold must be positive, got {self.d_threshold}")


@dataclass(frozen=True)
class RepresentativeColor:
    L: float
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.L <= 100.0 and -128.0 <= self.a <= 127.0 and -128.0 <= self.b <= 127.0):
            raise ValueError(f"Lab point outside gamut bounds: ({self.L}, {self.a}, {self.b})")


def build_histogram(pixels_lab: np.ndarray, channel: str) -> ChannelHistogram256:
    """Histogram one channel of a region's Lab pixel values over 256 bins.

    Raises EmptyRegion for an empty pixel set so callers can mark the
    region absent.
    """
    pixels_lab = np.asarray(pixels_lab, dtype=np.float64).reshape(-1, 3)
    if pixels_lab.shape[0] == 0:
        raise EmptyRegion(f"cannot histogram an empty pixel set (channel {channel})")
    idx = lab_bin_indices(pixels_lab, channel)
    bins = np.bincount(idx, minlength=256).astype(np.float64)
    return ChannelHistogram256(channel=channel, bins=bins)


def uniform_smooth(values: np.ndarray, filter_length: int) -> np.ndarray:
    """Centered moving average with edge replication at the borders.

    Works on histograms of any length; filter_length 1 is the identity.
    """
    values = np.asarray(values, dtype=np.float64)
    if filter_length == 1:
        return values.copy()
    half = filter_length // 2
    padded = np.concatenate(
        [np.repeat(values[:1], half), values, np.repeat(values[-1:], half)]
    )
    csum = np.concatenate([[0.0], np.cumsum(padded)])
    return (csum[filter_length:] - csum[:-filter_length]) / filter_length


def smooth_histogram(h: ChannelHistogram256, cfg: SmoothingConfig) -> ChannelHistogram256:
    """Apply the uniform filter to a 256-bin histogram.

    Output bins are window means, so the histogram sum is generally not
    preserved.
    """
    return ChannelHistogram256(channel=h.channel, bins=uniform_smooth(h.bins, cfg.filter_length))


def compress_histogram(h: ChannelHistogram256) -> np.ndarray:
    """Compress 256 bins to 64 by summing groups of four consecutive bins."""
    return h.bins.reshape(64, 4).sum(axis=1)


def binarize(h64: np.ndarray, threshold_factor: float = 1.0, channel: str = "L") -> BinaryHistogram64:
    """Threshold a 64-bin histogram against its mean bin value.

    Bit k is set when bin k strictly exceeds threshold_factor times the
    mean, so a perfectly uniform histogram produces no set bits.
    """
    h64 = np.asarray(h64, dtype=np.float64)
    if h64.shape != (64,):
        raise ValueError(f"expected 64 bins, got {h64.shape}")
    if not threshold_factor > 0:
        raise ValueError(f"threshold_factor must be positive, got {threshold_factor}")
    total = float(h64.sum())
    if total <= 0:
        raise ValueError("binarize requires at least one count")
    threshold = threshold_factor * (total / 64.0)
    word = 0
    for k in np.nonzero(h64 > threshold)[0]:
        word |= 1 << int(k)
    return BinaryHistogram64(channel=channel, bits=word)


def channel_similarity(b1: BinaryHistogram64, b2: BinaryHistogram64) -> float:
    """Intersection over union of the two bit sets.

    Returns 1.0 exactly for equal non-empty bit patterns and 0.0 when
    both are empty (no color evidence; the caller drops the channel from
    the weighted sum).
    """
    if b1.channel != b2.channel:
        raise ValueError(f"channel mismatch: {b1.channel!r} vs {b2.channel!r}")
    union = (b1.bits | b2.bits).bit_count()
    if union == 0:
        return 0.0
    return (b1.bits & b2.bits).bit_count() / union


def representative_color(pixels_lab: np.ndarray) -> RepresentativeColor:
    """Per-channel arithmetic mean of a region's Lab values."""
    pixels_lab = np.asarray(pixels_lab, dtype=np.float64).reshape(-1, 3)
    if pixels_lab.shape[0] == 0:
        raise EmptyRegion("cannot take a representative color of an empty pixel set")
    mean = pixels_lab.mean(axis=0)
    return RepresentativeColor(L=float(mean[0]), a=float(mean[1]), b=float(mean[2]))


def distance_similarity(
    c1: RepresentativeColor, c2: RepresentativeColor, cfg: DistanceConfig = DistanceConfig()
) -> float:
    """Linear ramp from 1 at zero Lab distance down to 0 at the threshold."""
    dl = c1.L - c2.L
    da = c1.a - c2.a
    db = c1.b - c2.b
    dist = math.sqrt(dl * dl + da * da + db * db)
    return max(0.0, 1.0 - dist / cfg.d_threshold)
