"""Evaluation protocol: filename parsing, AP, metric aggregation, sweeps."""

import logging
import random
from pathlib import Path

import pytest

from labreid.errors import FilenameParseError, LayoutError, NoValidQueries
from labreid.evaluate import (
    AnnotatedImage,
    MetricsReport,
    ablation_sweep,
    average_precision,
    evaluate,
    extract_dataset_features,
    load_dataset,
    parse_image_name,
    run_evaluation,
)
from labreid.features import PipelineConfig
from labreid.texture import fallback_encoder

from conftest import make_person


def entry(image_id: str, pid: int, cam: int, split: str = "gallery") -> AnnotatedImage:
    return AnnotatedImage(
        image_id=image_id, person_id=pid, camera_id=cam, split=split, path=Path(image_id)
    )


def test_parse_image_name():
    assert parse_image_name("0001_c1s1_000151_00.jpg") == (1, 1)
    assert parse_image_name("1498_c6s3_012345_03.jpg") == (1498, 6)
    assert parse_image_name("-1_c2s1_000700_00.png") == (-1, 2)
    assert parse_image_name("0000_c3s2_1.bmp") == (0, 3)
    for bad in ("portrait.jpg", "x_c1s1_0.jpg", "12_d3_0.jpg"):
        with pytest.raises(FilenameParseError):
            parse_image_name(bad)


def test_is_junk_flag():
    assert entry("-1_c2s1_000700_00", -1, 2).is_junk
    assert not entry("0000_c2s1_000600_00", 0, 2).is_junk


def test_metrics_row_format():
    report = MetricsReport(rank_1=50.0, rank_10=75.0, mean_ap=33.3, num_queries=4)
    assert report.row() == "-\t50.0\t75.0\t33.3\t4"
    named = MetricsReport(
        rank_1=100.0, rank_10=100.0, mean_ap=99.95, num_queries=12, preset="sweep_a"
    )
    assert named.row().startswith("sweep_a\t100.0\t")


def test_average_precision_hand_values():
    assert average_precision([]) == 0.0
    assert average_precision([1]) == 1.0
    assert average_precision([2]) == 0.5
    assert average_precision([1, 2]) == 1.0
    assert average_precision([2, 4]) == (1 / 2 + 2 / 4) / 2
    # Ranks are sorted before the positional credit is assigned.
    assert average_precision([4, 2]) == average_precision([2, 4])
    assert average_precision([1, 3, 5]) == (1 / 1 + 2 / 3 + 3 / 5) / 3


def test_evaluate_single_query_hand_case():
    q = entry("q", 1, 1, "query")
    gallery = [
        entry("g1", 1, 1),   # same id, same camera: excluded
        entry("g2", 2, 1),
        entry("g3", 1, 2),   # the one true positive
        entry("g4", -1, 2),  # junk: ignored
        entry("g5", 3, 2),
    ]
    ranking = ["ghost", "g2", "g4", "g3", "g1", "g5"]
    report = evaluate([q], gallery, lambda _: ranking, fingerprint="fp", preset="p")
    # Filtered ranking is g2, g3, g5: the positive sits at rank 2.
    assert report.num_queries == 1
    assert report.rank_1 == 0.0
    assert report.rank_10 == 100.0
    assert report.mean_ap == 50.0
    assert report.fingerprint == "fp"
    assert report.preset == "p"


def test_evaluate_distractors_count_as_negatives():
    q = entry("q", 1, 1, "query")
    gallery = [entry("g_pos", 1, 2), entry("g_zero", 0, 2)]
    ahead = evaluate([q], gallery, lambda _: ["g_zero", "g_pos"])
    behind = evaluate([q], gallery, lambda _: ["g_pos", "g_zero"])
    assert ahead.mean_ap == 50.0
    assert behind.mean_ap == 100.0


def test_evaluate_skips_unusable_queries():
    junk_q = entry("jq", -1, 1, "query")
    lonely_q = entry("lq", 7, 1, "query")       # no positive anywhere
    same_cam_q = entry("sq", 8, 1, "query")     # positive only on its own camera
    good_q = entry("gq", 9, 1, "query")
    gallery = [
        entry("g_same", 8, 1),
        entry("g_good", 9, 2),
        entry("g_junk9", -1, 2),
    ]
    ranking = ["g_good", "g_same", "g_junk9"]
    report = evaluate([junk_q, lonely_q, same_cam_q, good_q], gallery, lambda _: ranking)
    assert report.num_queries == 1
    assert report.rank_1 == 100.0


def test_evaluate_skips_uncovered_queries():
    # The ranking never mentions the only positive, so the query is unusable.
    q1 = entry("q1", 1, 1, "query")
    q2 = entry("q2", 2, 1, "query")
    gallery = [entry("p1", 1, 2), entry("p2", 2, 2)]
    report = evaluate([q1, q2], gallery, lambda q: ["p2"] if q.person_id == 2 else [])
    assert report.num_queries == 1
    assert report.rank_1 == 100.0


def test_evaluate_no_valid_queries():
    junk_q = entry("jq", -1, 1, "query")
    gallery = [entry("g", 5, 2)]
    with pytest.raises(NoValidQueries):
        evaluate([junk_q], gallery, lambda _: ["g"])


def oracle_metrics(queries, gallery, ranking_by_query):
    """Protocol recomputed from the rules, written independently."""
    by_id = {g.image_id: g for g in gallery}
    hits1 = hits10 = used = 0
    ap_sum = 0.0
    for q in queries:
        if q.person_id == -1:
            continue
        positives_exist = any(
            g.person_id == q.person_id and g.camera_id != q.camera_id and g.person_id != -1
            for g in gallery
        )
        if not positives_exist:
            continue
        ranks = []
        seen = 0
        for gid in ranking_by_query[q.image_id]:
            g = by_id.get(gid)
            if g is None or g.person_id == -1:
                continue
            if g.person_id == q.person_id and g.camera_id == q.camera_id:
                continue
            seen += 1
            if g.person_id == q.person_id:
                ranks.append(seen)
        if not ranks:
            continue
        used += 1
        hits1 += 1 if ranks[0] == 1 else 0
        hits10 += 1 if ranks[0] <= 10 else 0
        ap_sum += sum(j / r for j, r in enumerate(sorted(ranks), start=1)) / len(ranks)
    return 100.0 * hits1 / used, 100.0 * hits10 / used, 100.0 * ap_sum / used, used


def test_evaluate_matches_independent_oracle():
    rng = random.Random(1234)
    gallery = []
    for i in range(40):
        pid = rng.choice([-1, 0, 1, 2, 3, 4, 5])
        gallery.append(entry(f"g{i:02d}", pid, rng.randint(1, 3)))
    queries = [entry(f"q{i}", rng.randint(1, 5), rng.randint(1, 3), "query") for i in range(12)]
    ids = [g.image_id for g in gallery]
    ranking_by_query = {}
    for q in queries:
        shuffled = ids[:]
        rng.shuffle(shuffled)
        ranking_by_query[q.image_id] = shuffled
    report = evaluate(queries, gallery, lambda q: ranking_by_query[q.image_id])
    r1, r10, mean_ap, used = oracle_metrics(queries, gallery, ranking_by_query)
    assert used > 0
    assert report.num_queries == used
    assert report.rank_1 == r1
    assert report.rank_10 == r10
    assert report.mean_ap == mean_ap


def test_load_dataset_market_layout(market):
    queries, gallery = load_dataset(market.root)
    assert len(queries) == market.num_queries
    assert len(gallery) == market.num_queries + 3
    assert all(q.split == "query" for q in queries)
    junk = [g for g in gallery if g.is_junk]
    assert len(junk) == 1 and junk[0].camera_id == 2


def test_load_dataset_layout_errors(tmp_path):
    with pytest.raises(LayoutError, match="not a directory"):
        load_dataset(tmp_path / "absent")
    (tmp_path / "bounding_box_test").mkdir()
    with pytest.raises(LayoutError, match="missing dataset directory"):
        load_dataset(tmp_path)
    (tmp_path / "query").mkdir()
    (tmp_path / "query" / "notes.txt").write_text("not an image")
    with pytest.raises(LayoutError, match="no images found"):
        load_dataset(tmp_path)


def test_scan_collects_all_bad_names(tmp_path):
    qdir = tmp_path / "query"
    qdir.mkdir()
    (tmp_path / "bounding_box_test").mkdir()
    img, _ = make_person()
    (qdir / "0001_c1s1_000000_00.png").write_bytes(img)
    (qdir / "portrait.jpg").write_bytes(img)
    (qdir / "x_c1s1_0.jpg").write_bytes(img)
    with pytest.raises(FilenameParseError) as exc_info:
        load_dataset(tmp_path)
    message = str(exc_info.value)
    assert "2 unparseable" in message
    assert "portrait.jpg" in message and "x_c1s1_0.jpg" in message


def test_extract_dataset_features_skips_missing_masks(tmp_path, caplog):
    img, mask = make_person()
    (tmp_path / "a.png").write_bytes(img)
    (tmp_path / "b.png").write_bytes(img)
    masks = tmp_path / "masks"
    masks.mkdir()
    (masks / "a.png").write_bytes(mask)
    entries = [
        AnnotatedImage(image_id=s, person_id=1, camera_id=1, split="q", path=tmp_path / f"{s}.png")
        for s in ("a", "b")
    ]
    with caplog.at_level(logging.WARNING, logger="labreid.evaluate"):
        vectors = extract_dataset_features(entries, masks, PipelineConfig(), fallback_encoder())
    assert sorted(vectors) == ["a"]
    assert any("skipping b" in rec.getMessage() for rec in caplog.records)


def test_run_evaluation_on_synthetic_market(market):
    report = run_evaluation(market.root, market.masks)
    assert report.num_queries == market.num_queries
    assert report.rank_1 == 100.0
    assert report.rank_10 == 100.0
    assert report.mean_ap == 100.0
    assert report.preset == "table3_2_row11"
    assert len(report.fingerprint) == 64


def test_ablation_sweep_caches_by_fingerprint(market, caplog):
    names = ["table3_2_row1", "table3_2_row7"]
    with caplog.at_level(logging.INFO, logger="labreid.evaluate"):
        reports = ablation_sweep(market.root, market.masks, names)
    assert [r.preset for r in reports] == names
    extractions = [rec for rec in caplog.records if "extracting features" in rec.getMessage()]
    assert len(extractions) == 1
    assert reports[0].fingerprint == reports[1].fingerprint
    # Every weight variant still ranks this corpus perfectly.
    assert {r.rank_1 for r in reports} == {100.0}
