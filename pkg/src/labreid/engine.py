"""Similarity fusion and gallery ranking.

Per-region channel similarities (three binary-histogram channels, the
Lab-distance channel d, and the texture channel t) are fused into a
region score S_c as a weighted average over the channels that carry
evidence.  Region scores are combined into the total score S_tot as a
raw weighted sum over the regions present in both images, so S_tot is
unbounded above: with the default class weights an upper-clothes-only
match tops out at 8 and upper clothes plus pants at 14.

Two scoring paths exist: the scalar functions here, and PackedGallery,
which lays a gallery out in numpy arrays for batch scoring.  The two
accumulate in the same order so their scores agree bit for bit; tests
hold them to that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .color import (
    BinaryHistogram64,
    DistanceConfig,
    RepresentativeColor,
    channel_similarity,
    distance_similarity,
)
from .errors import EmptyGallery, NoCommonRegions, RegionAbsent
from .masks import WEIGHTED_CLASSES, ParserClass
from .texture import (
    TEXTURE_CLASS_ORDER,
    LatentSpaceConfig,
    TexturePoint,
    class_similarity_vector,
    texture_similarity,
)

CHANNEL_ORDER = ("L", "a", "b", "d", "t")


@dataclass(frozen=True)
class ChannelWeights:
    """Weights of the five feature channels; they must sum to 1."""

    w_L: float = 0.2
    w_a: float = 0.1
    w_b: float = 0.1
    w_d: float = 0.3
    w_t: float = 0.3

    def __post_init__(self) -> None:
        vals = self.as_tuple()
        if any(w < 0 for w in vals):
            raise ValueError(f"channel weights must be non-negative, got {vals}")
        total = sum(vals)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"channel weights must sum to 1, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w_L, self.w_a, self.w_b, self.w_d, self.w_t)

    @classmethod
    def default(cls) -> "ChannelWeights":
        return cls()


@dataclass(frozen=True)
class ClassWeights:
    """Per-region weights for the total score; not normalized."""

    table: Mapping[ParserClass, float]

    def __post_init__(self) -> None:
        got = set(self.table)
        want = set(WEIGHTED_CLASSES)
        if got != want:
            missing = sorted(c.name for c in want - got)
            extra = sorted(getattr(c, "name", str(c)) for c in got - want)
            raise ValueError(f"class weights missing {missing}, unexpected {extra}")
        for cls_, w in self.table.items():
            if not (isinstance(w, (int, float)) and math.isfinite(w)) or w < 0:
                raise ValueError(f"weight for {cls_.name} must be a non-negative real, got {w!r}")
        object.__setattr__(self, "table", dict(self.table))

    def weight(self, cls_: ParserClass) -> float:
        return float(self.table[cls_])

    @classmethod
    def default(cls) -> "ClassWeights":
        return cls(
            table={
                ParserClass.UPPER_CLOTHES: 8.0,
                ParserClass.PANTS: 6.0,
                ParserClass.HAIR: 3.0,
                ParserClass.GLOVES_BOOTS: 2.0,
                ParserClass.LEGS: 1.0,
                ParserClass.OTHER: 1.0,
            }
        )


@dataclass(frozen=True)
class RegionColorFeature:
    """The color evidence for one region: three binary histograms plus
    the representative Lab color anchoring the d channel."""

    hist_L: BinaryHistogram64
    hist_a: BinaryHistogram64
    hist_b: BinaryHistogram64
    rep_color: RepresentativeColor

    def __post_init__(self) -> None:
        for hist, expected in ((self.hist_L, "L"), (self.hist_a, "a"), (self.hist_b, "b")):
            if hist.channel != expected:
                raise ValueError(f"histogram tagged {hist.channel!r} in the {expected} slot")

    def histogram(self, channel: str) -> BinaryHistogram64:
        return {"L": self.hist_L, "a": self.hist_a, "b": self.hist_b}[channel]


@dataclass(frozen=True)
class RegionFeatures:
    """Evidence for one region.  Extraction always fills the color part;
    description queries may carry texture alone."""

    color: RegionColorFeature | None = None
    texture: TexturePoint | None = None

    def __post_init__(self) -> None:
        if self.color is None and self.texture is None:
            raise ValueError("a region feature needs color or texture evidence")


@dataclass(frozen=True)
class PersonFeatureVector:
    image_id: str
    regions: Mapping[ParserClass, RegionFeatures]

    def __post_init__(self) -> None:
        for cls_, feat in self.regions.items():
            if cls_ not in WEIGHTED_CLASSES:
                raise ValueError(f"feature vector may not carry region {cls_!r}")
            if feat.texture is not None and cls_ is not ParserClass.UPPER_CLOTHES:
                raise ValueError(f"texture point on {cls_.name}, allowed only on UPPER_CLOTHES")
        object.__setattr__(self, "regions", dict(self.regions))

    @property
    def present_regions(self) -> frozenset[ParserClass]:
        return frozenset(self.regions)


@dataclass(frozen=True)
class RankedResult:
    image_id: str
    s_tot: float
    used_regions: tuple[ParserClass, ...]
    breakdown: Mapping[ParserClass, float] = field(default_factory=dict)


def fuse_channels(
    sims: Sequence[float], w: ChannelWeights, usable: Sequence[bool] = (True,) * 5
) -> float:
    """Weighted average of channel similarities over the usable channels.

    Channels without evidence are dropped and the remaining weights are
    renormalized, which keeps their ratios intact.  With every usable
    weight at zero the region carries no comparable evidence and scores 0.
    """
    if len(sims) != 5 or len(usable) != 5:
        raise ValueError("expected five channel similarities and five usability flags")
    num = 0.0
    den = 0.0
    for wi, si, ok in zip(w.as_tuple(), sims, usable):
        if ok:
            num += wi * si
            den += wi
    if den <= 0.0:
        return 0.0
    return num / den


def rescaled_weights(w: ChannelWeights, usable: Sequence[bool]) -> tuple[float, ...]:
    """Effective per-channel weights after dropping unusable channels.

    The kept weights are divided by their sum, so w_i/w_j is preserved
    and the result sums to 1 (all zeros if nothing is usable).
    """
    kept = [wi if ok else 0.0 for wi, ok in zip(w.as_tuple(), usable)]
    total = sum(kept)
    if total <= 0.0:
        return (0.0,) * 5
    return tuple(wi / total for wi in kept)


def region_similarity(
    f1: RegionFeatures | None,
    f2: RegionFeatures | None,
    w: ChannelWeights,
    texture_available: bool = True,
    distance_cfg: DistanceConfig = DistanceConfig(),
    ls_cfg: LatentSpaceConfig | None = None,
) -> float:
    """Region score S_c in [0, 1] from the two regions' stored features."""
    if f1 is None or f2 is None:
        raise RegionAbsent("both regions must be present to compare them")
    num = 0.0
    den = 0.0
    c1, c2 = f1.color, f2.color
    if c1 is not None and c2 is not None:
        for wi, h1, h2 in (
            (w.w_L, c1.hist_L, c2.hist_L),
            (w.w_a, c1.hist_a, c2.hist_a),
            (w.w_b, c1.hist_b, c2.hist_b),
        ):
            if h1.bits == 0 and h2.bits == 0:
                continue
            num += wi * channel_similarity(h1, h2)
            den += wi
        num += w.w_d * distance_similarity(c1.rep_color, c2.rep_color, distance_cfg)
        den += w.w_d
    if texture_available and f1.texture is not None and f2.texture is not None:
        ls = ls_cfg or LatentSpaceConfig.default()
        num += w.w_t * texture_similarity(f1.texture, f2.texture, ls)
        den += w.w_t
    if den <= 0.0:
        return 0.0
    return num / den


def total_similarity(
    q: PersonFeatureVector,
    g: PersonFeatureVector,
    cw: ClassWeights | None = None,
    chw: ChannelWeights | None = None,
    distance_cfg: DistanceConfig = DistanceConfig(),
    ls_cfg: LatentSpaceConfig | None = None,
) -> RankedResult:
    """Total score over the regions present in both vectors.

    Raises NoCommonRegions when the two region sets are disjoint; the
    ranking layer maps that case to a score of 0.
    """
    cw = cw or ClassWeights.default()
    chw = chw or ChannelWeights.default()
    common = [c for c in WEIGHTED_CLASSES if c in q.regions and c in g.regions]
    if not common:
        raise NoCommonRegions(
            f"{q.image_id!r} and {g.image_id!r} share no parsed regions"
        )
    s_tot = 0.0
    breakdown: dict[ParserClass, float] = {}
    for cls_ in common:
        s_c = region_similarity(
            q.regions[cls_],
            g.regions[cls_],
            chw,
            texture_available=cls_ is ParserClass.UPPER_CLOTHES,
            distance_cfg=distance_cfg,
            ls_cfg=ls_cfg,
        )
        breakdown[cls_] = s_c
        s_tot += cw.weight(cls_) * s_c
    return RankedResult(
        image_id=g.image_id, s_tot=s_tot, used_regions=tuple(common), breakdown=breakdown
    )


def max_achievable_score(q: PersonFeatureVector, cw: ClassWeights | None = None) -> float:
    """Best possible S_tot against q: the sum of its regions' class weights."""
    cw = cw or ClassWeights.default()
    total = 0.0
    for cls_ in WEIGHTED_CLASSES:
        if cls_ in q.regions:
            total += cw.weight(cls_)
    return total


def rank_gallery(
    q: PersonFeatureVector,
    gallery: Sequence[PersonFeatureVector],
    cw: ClassWeights | None = None,
    chw: ChannelWeights | None = None,
    top_k: int = 10,
    distance_cfg: DistanceConfig = DistanceConfig(),
    ls_cfg: LatentSpaceConfig | None = None,
) -> list[RankedResult]:
    """Score every gallery vector against q and return the best top_k.

    Sorted by score descending, ties broken by ascending image_id so the
    ordering is a deterministic total order.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be at least 1, got {top_k}")
    if not gallery:
        raise EmptyGallery("cannot rank an empty gallery")
    results = []
    for g in gallery:
        try:
            results.append(
                total_similarity(q, g, cw, chw, distance_cfg=distance_cfg, ls_cfg=ls_cfg)
            )
        except NoCommonRegions:
            results.append(RankedResult(image_id=g.image_id, s_tot=0.0, used_regions=()))
    results.sort(key=lambda r: (-r.s_tot, r.image_id))
    return results[:top_k]


class PackedGallery:
    """Column layout of a gallery for batch scoring.

    Every arithmetic step mirrors the scalar path operation for
    operation, so batch scores are bit-identical to total_similarity and
    the resulting ranking matches rank_gallery exactly.
    """

    def __init__(self, vectors: Sequence[PersonFeatureVector]):
        self.vectors = list(vectors)
        self.image_ids = np.array([v.image_id for v in self.vectors])
        n = len(self.vectors)
        self.present: dict[ParserClass, np.ndarray] = {}
        self.words: dict[ParserClass, np.ndarray] = {}
        self.has_color: dict[ParserClass, np.ndarray] = {}
        self.reps: dict[ParserClass, np.ndarray] = {}
        for cls_ in WEIGHTED_CLASSES:
            present = np.zeros(n, dtype=bool)
            has_color = np.zeros(n, dtype=bool)
            words = np.zeros((n, 3), dtype=np.uint64)
            reps = np.zeros((n, 3), dtype=np.float64)
            for i, v in enumerate(self.vectors):
                feat = v.regions.get(cls_)
                if feat is None:
                    continue
                present[i] = True
                if feat.color is not None:
                    has_color[i] = True
                    words[i, 0] = feat.color.hist_L.bits
                    words[i, 1] = feat.color.hist_a.bits
                    words[i, 2] = feat.color.hist_b.bits
                    rep = feat.color.rep_color
                    reps[i] = (rep.L, rep.a, rep.b)
            self.present[cls_] = present
            self.has_color[cls_] = has_color
            self.words[cls_] = words
            self.reps[cls_] = reps
        self.has_tex = np.zeros(n, dtype=bool)
        self.tex = np.zeros((n, 2), dtype=np.float64)
        for i, v in enumerate(self.vectors):
            feat = v.regions.get(ParserClass.UPPER_CLOTHES)
            if feat is not None and feat.texture is not None:
                self.has_tex[i] = True
                self.tex[i] = (feat.texture.x, feat.texture.y)

    def __len__(self) -> int:
        return len(self.vectors)

    def _texture_sims(self, point: TexturePoint, ls: LatentSpaceConfig) -> np.ndarray:
        centers = ls.center_array()
        two_sigma_sq = 2.0 * ls.kernel_sigma**2
        qv = class_similarity_vector(point, ls).tolist()
        x, y = self.tex[:, 0], self.tex[:, 1]
        dot = np.zeros(len(self.vectors))
        nrm = np.zeros(len(self.vectors))
        n_q = 0.0
        for k in range(len(TEXTURE_CLASS_ORDER)):
            dx = x - centers[k, 0]
            dy = y - centers[k, 1]
            vk = np.exp(-(dx * dx + dy * dy) / two_sigma_sq)
            dot += qv[k] * vk
            n_q += qv[k] * qv[k]
            nrm += vk * vk
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.has_tex, dot / np.sqrt(n_q * nrm), 0.0)

    def score(
        self,
        q: PersonFeatureVector,
        cw: ClassWeights | None = None,
        chw: ChannelWeights | None = None,
        distance_cfg: DistanceConfig = DistanceConfig(),
        ls_cfg: LatentSpaceConfig | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Scores of q against every stored vector.

        Returns (scores, has_common); items sharing no region with q
        have has_common False and score 0.
        """
        cw = cw or ClassWeights.default()
        chw = chw or ChannelWeights.default()
        ls = ls_cfg or LatentSpaceConfig.default()
        n = len(self.vectors)
        s_tot = np.zeros(n)
        has_common = np.zeros(n, dtype=bool)
        for cls_ in WEIGHTED_CLASSES:
            q_feat = q.regions.get(cls_)
            if q_feat is None:
                continue
            present = self.present[cls_]
            if not present.any():
                continue
            num = np.zeros(n)
            den = np.zeros(n)
            if q_feat.color is not None:
                usable_color = self.has_color[cls_].astype(np.float64)
                words = self.words[cls_]
                for ch, (wi, hist) in enumerate(
                    (
                        (chw.w_L, q_feat.color.hist_L),
                        (chw.w_a, q_feat.color.hist_a),
                        (chw.w_b, q_feat.color.hist_b),
                    )
                ):
                    qw = np.uint64(hist.bits)
                    union = np.bitwise_count(words[:, ch] | qw).astype(np.float64)
                    inter = np.bitwise_count(words[:, ch] & qw).astype(np.float64)
                    sims = np.divide(inter, union, out=np.zeros(n), where=union > 0)
                    usable = usable_color * (union > 0)
                    num += (wi * sims) * usable
                    den += wi * usable
                rep = q_feat.color.rep_color
                reps = self.reps[cls_]
                dl = reps[:, 0] - rep.L
                da = reps[:, 1] - rep.a
                db = reps[:, 2] - rep.b
                dist = np.sqrt(dl * dl + da * da + db * db)
                d_sims = np.maximum(0.0, 1.0 - dist / distance_cfg.d_threshold)
                num += (chw.w_d * d_sims) * usable_color
                den += chw.w_d * usable_color
            if cls_ is ParserClass.UPPER_CLOTHES and q_feat.texture is not None:
                usable_tex = self.has_tex.astype(np.float64)
                t_sims = self._texture_sims(q_feat.texture, ls)
                num += (chw.w_t * t_sims) * usable_tex
                den += chw.w_t * usable_tex
            s_c = np.divide(num, den, out=np.zeros(n), where=den > 0)
            s_tot += (cw.weight(cls_) * s_c) * present
            has_common |= present
        s_tot[~has_common] = 0.0
        return s_tot, has_common

    def rank_order(self, scores: np.ndarray) -> np.ndarray:
        """Indices sorted by score descending, image_id ascending."""
        return np.lexsort((self.image_ids, -scores))

    def rank(
        self,
        q: PersonFeatureVector,
        cw: ClassWeights | None = None,
        chw: ChannelWeights | None = None,
        top_k: int = 10,
        distance_cfg: DistanceConfig = DistanceConfig(),
        ls_cfg: LatentSpaceConfig | None = None,
    ) -> list[RankedResult]:
        """Batch-scored equivalent of rank_gallery, with full per-region
        breakdowns recomputed for the returned results only."""
        if top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {top_k}")
        if not self.vectors:
            raise EmptyGallery("cannot rank an empty gallery")
        scores, _ = self.score(q, cw, chw, distance_cfg=distance_cfg, ls_cfg=ls_cfg)
        order = self.rank_order(scores)[:top_k]
        results = []
        for idx in order:
            g = self.vectors[int(idx)]
            try:
                results.append(
                    total_similarity(q, g, cw, chw, distance_cfg=distance_cfg, ls_cfg=ls_cfg)
                )
            except NoCommonRegions:
                results.append(RankedResult(image_id=g.image_id, s_tot=0.0, used_regions=()))
        return results
