"""Shared synthetic fixtures.

Builds small person crops (128x64) with LIP-style raw label masks, plus a
Market-style evaluation tree.  Patterned shirts are painted with strong
contrast; low-contrast patterns disappear under the sensor noise the
builder adds, exactly as they would on a real camera.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from labreid.features import PipelineConfig
from labreid.store import FeatureStore, build_index

# Raw LIP palette ids used by the synthetic masks.
RAW_HAIR = 2
RAW_UPPER = 5
RAW_PANTS = 9
RAW_ARM = 14  # aggregated into the legs group by the packaged mapping
RAW_SHOE = 18


def png_bytes(arr: np.ndarray, mode: str) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr, mode).save(buf, "PNG")
    return buf.getvalue()


def pattern_cells(pattern: str, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    if pattern == "check":
        return ((yy // 6) + (xx // 6)) % 2 == 0
    if pattern == "h":
        return (yy // 6) % 2 == 0
    if pattern == "v":
        return (xx // 6) % 2 == 0
    if pattern == "dots":
        return ((yy % 12) - 6) ** 2 + ((xx % 12) - 6) ** 2 <= 4
    raise ValueError(f"unknown pattern {pattern!r}")


def make_person(
    shirt_rgb=(180, 30, 30),
    pants_rgb=(20, 20, 140),
    pattern: str | None = None,
    pattern_rgb=(235, 235, 235),
    hair_rgb=(40, 25, 10),
    skin_rgb=(224, 198, 170),
    shoe_rgb=(30, 30, 30),
    seed: int = 0,
    noise: int = 8,
    upper_rows: tuple[int, int] = (16, 64),
    drop: tuple[str, ...] = (),
) -> tuple[bytes, bytes]:
    """One synthetic crop and its raw label mask, both as PNG bytes.

    ``drop`` removes whole regions; ``upper_rows`` shrinks the shirt so
    texture-patch edge cases can be produced.
    """
    rng = np.random.default_rng(seed)
    h, w = 128, 64
    img = np.full((h, w, 3), (200, 200, 200), dtype=np.uint8)
    mask = np.zeros((h, w), dtype=np.uint8)

    def band(r0, r1, c0, c1, color, raw):
        img[r0:r1, c0:c1] = color
        mask[r0:r1, c0:c1] = raw

    if "hair" not in drop:
        band(0, 16, 24, 40, hair_rgb, RAW_HAIR)
    r0, r1 = upper_rows
    band(r0, r1, 12, 52, shirt_rgb, RAW_UPPER)
    if pattern is not None:
        yy, xx = np.mgrid[r0:r1, 12:52]
        sel = pattern_cells(pattern, yy, xx)
        img[r0:r1, 12:52][sel] = pattern_rgb
    if "pants" not in drop:
        band(64, 96, 16, 48, pants_rgb, RAW_PANTS)
    if "legs" not in drop:
        band(96, 112, 18, 46, skin_rgb, RAW_ARM)
    if "shoes" not in drop:
        band(112, 128, 18, 46, shoe_rgb, RAW_SHOE)
    if noise:
        delta = rng.integers(-noise, noise + 1, img.shape)
        img = np.clip(img.astype(np.int64) + delta, 0, 255).astype(np.uint8)
    return png_bytes(img, "RGB"), png_bytes(mask, "L")


def archetype_patch(
    kind: str,
    side: int = 64,
    band: int = 8,
    lo: float = 30.0,
    hi: float = 230.0,
    phase: tuple[int, int] = (0, 0),
) -> np.ndarray:
    """Noise-free grayscale patch of one texture archetype.

    ``phase`` translates the underlying infinite pattern; shifting by a
    full period (2 * band) reproduces the identical patch.
    """
    y = np.arange(side, dtype=np.int64)[:, None] + phase[0]
    x = np.arange(side, dtype=np.int64)[None, :] + phase[1]
    if kind == "uniform":
        sel = np.zeros((side, side), dtype=bool)
    elif kind == "horizontal_lines":
        sel = np.broadcast_to((y // band) % 2 == 0, (side, side))
    elif kind == "vertical_lines":
        sel = np.broadcast_to((x // band) % 2 == 0, (side, side))
    elif kind == "checkered":
        sel = ((y // band) + (x // band)) % 2 == 0
    elif kind == "dots":
        period = 2 * band
        sel = ((y % period) - band) ** 2 + ((x % period) - band) ** 2 <= (band // 2 - 1) ** 2
    else:
        raise ValueError(f"unknown archetype {kind!r}")
    return np.where(sel, hi, lo).astype(np.float64)


# The shared corpus: two near-duplicate red shirts, a green one, two navy
# checkered ones, a striped one, a white-on-white person, and a dotted one.
CORPUS_PEOPLE: tuple[tuple[str, dict], ...] = (
    ("alice_red", dict(shirt_rgb=(180, 30, 30), pants_rgb=(20, 20, 140), seed=1)),
    ("bob_red", dict(shirt_rgb=(188, 28, 26), pants_rgb=(24, 18, 132), seed=2)),
    ("carol_green", dict(shirt_rgb=(30, 140, 40), pants_rgb=(25, 25, 25), seed=3)),
    ("dave_check", dict(shirt_rgb=(25, 25, 90), pants_rgb=(90, 90, 90), pattern="check", seed=4)),
    ("erin_check", dict(shirt_rgb=(32, 28, 96), pants_rgb=(85, 88, 92), pattern="check", seed=5)),
    ("frank_stripes", dict(shirt_rgb=(25, 25, 90), pants_rgb=(40, 40, 40), pattern="h", seed=6)),
    ("grace_white", dict(shirt_rgb=(240, 240, 240), pants_rgb=(235, 235, 235), seed=7)),
    ("henry_dots", dict(shirt_rgb=(30, 30, 30), pattern="dots", seed=8)),
)


@dataclass(frozen=True)
class Corpus:
    images: Path
    masks: Path
    names: tuple[str, ...]

    def image_bytes(self, name: str) -> bytes:
        return (self.images / f"{name}.png").read_bytes()

    def mask_bytes(self, name: str) -> bytes:
        return (self.masks / f"{name}.png").read_bytes()


def write_people(images: Path, masks: Path, people) -> None:
    images.mkdir(parents=True, exist_ok=True)
    masks.mkdir(parents=True, exist_ok=True)
    for name, kwargs in people:
        img, mask = make_person(**kwargs)
        (images / f"{name}.png").write_bytes(img)
        (masks / f"{name}.png").write_bytes(mask)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory) -> Corpus:
    root = tmp_path_factory.mktemp("corpus")
    write_people(root / "images", root / "masks", CORPUS_PEOPLE)
    return Corpus(
        images=root / "images",
        masks=root / "masks",
        names=tuple(name for name, _ in CORPUS_PEOPLE),
    )


@pytest.fixture(scope="session")
def corpus_store(corpus) -> FeatureStore:
    return build_index(corpus.images, corpus.masks, PipelineConfig())


MARKET_IDENTITIES: dict[int, dict] = {
    1: dict(shirt_rgb=(180, 30, 30), pants_rgb=(20, 20, 140)),
    2: dict(shirt_rgb=(30, 140, 40), pants_rgb=(25, 25, 25)),
    3: dict(shirt_rgb=(25, 25, 90), pants_rgb=(90, 90, 90), pattern="check"),
    4: dict(shirt_rgb=(210, 190, 40), pants_rgb=(120, 20, 20)),
}


@dataclass(frozen=True)
class MarketFixture:
    root: Path
    masks: Path
    num_queries: int


@pytest.fixture(scope="session")
def market(tmp_path_factory) -> MarketFixture:
    """Market-layout tree: one query and one cross-camera positive per
    identity, one same-camera extra, a distractor, and a junk entry."""
    root = tmp_path_factory.mktemp("market")
    qdir = root / "query"
    gdir = root / "bounding_box_test"
    mdir = root / "masks"
    for d in (qdir, gdir, mdir):
        d.mkdir()

    def emit(directory: Path, stem: str, seed: int, **kwargs) -> None:
        img, mask = make_person(seed=seed, **kwargs)
        (directory / f"{stem}.png").write_bytes(img)
        (mdir / f"{stem}.png").write_bytes(mask)

    for pid, kwargs in MARKET_IDENTITIES.items():
        emit(qdir, f"{pid:04d}_c1s1_000000_00", seed=pid * 10, **kwargs)
        emit(gdir, f"{pid:04d}_c2s1_{pid:06d}_01", seed=pid * 10 + 1, **kwargs)
    emit(gdir, "0001_c1s1_000500_02", seed=11, **MARKET_IDENTITIES[1])
    emit(gdir, "0000_c2s1_000600_00", seed=60, shirt_rgb=(245, 245, 245))
    emit(gdir, "-1_c2s1_000700_00", seed=70, shirt_rgb=(10, 10, 10))
    return MarketFixture(root=root, masks=mdir, num_queries=len(MARKET_IDENTITIES))
