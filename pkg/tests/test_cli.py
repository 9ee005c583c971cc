"""CLI verbs, exit codes, and output formats."""

import io
import json

import pytest
from PIL import Image

from labreid.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main


@pytest.fixture(scope="module")
def store_path(tmp_path_factory, corpus_store):
    path = tmp_path_factory.mktemp("cli") / "corpus.reidx"
    corpus_store.save(path)
    return path


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_errors(capsys, store_path):
    code, _, err = run(capsys)
    assert code == EXIT_USAGE and "usage error" in err
    code, _, err = run(capsys, "search", "--store", "x.reidx")
    assert code == EXIT_USAGE and "required" in err
    code, _, err = run(capsys, "describe-search", "--store", str(store_path))
    assert code == EXIT_USAGE and "--term" in err
    code, _, err = run(
        capsys,
        "describe-search", "--store", str(store_path),
        "--term", "pants:color=black", "--term", "pants:color=white",
    )
    assert code == EXIT_USAGE and "described twice" in err
    code, _, err = run(
        capsys, "describe-search", "--store", str(store_path), "--term", "pants:color"
    )
    assert code == EXIT_USAGE and "key=value" in err
    code, _, err = run(
        capsys, "describe-search", "--store", str(store_path), "--term", "pants:shade=dark"
    )
    assert code == EXIT_USAGE and "unknown term key" in err


def test_data_errors(capsys, tmp_path, store_path):
    code, _, err = run(
        capsys, "search", "--store", str(tmp_path / "absent.reidx"),
        "--image", "i.png", "--mask", "m.png",
    )
    assert code == EXIT_DATA and "error [decode_error]" in err
    code, _, err = run(
        capsys, "describe-search", "--store", str(store_path), "--term", "pants:color=mauve"
    )
    assert code == EXIT_DATA and "error [unknown_color_name]" in err
    empty = tmp_path / "none"
    empty.mkdir()
    code, _, err = run(
        capsys, "index", "--images", str(empty), "--masks", str(empty),
        "--out", str(tmp_path / "o.reidx"),
    )
    assert code == EXIT_DATA and "error [empty_corpus]" in err


def test_index_then_search(capsys, tmp_path, corpus):
    out = tmp_path / "built.reidx"
    code, stdout, _ = run(
        capsys, "index", "--images", str(corpus.images), "--masks", str(corpus.masks),
        "--out", str(out),
    )
    assert code == EXIT_OK
    assert "indexed 8 images" in stdout
    assert out.is_file()

    code, stdout, _ = run(
        capsys, "search", "--store", str(out),
        "--image", str(corpus.images / "alice_red.png"),
        "--mask", str(corpus.masks / "alice_red.png"),
        "--top-k", "3",
    )
    assert code == EXIT_OK
    lines = stdout.splitlines()
    assert lines[0] == "query regions: upper_clothes, pants, hair, gloves_boots, legs"
    assert lines[1] == "max achievable score: 20"
    assert lines[2] == (
        "  1  alice_red  20.0000 out of 20  [upper_clothes,pants,hair,gloves_boots,legs]"
    )
    assert lines[3].startswith("  2  bob_red  ")
    assert len(lines) == 5


def test_search_json_output(capsys, corpus, store_path):
    code, stdout, _ = run(
        capsys, "search", "--store", str(store_path),
        "--image", str(corpus.images / "alice_red.png"),
        "--mask", str(corpus.masks / "alice_red.png"),
        "--top-k", "2", "--json",
    )
    assert code == EXIT_OK
    doc = json.loads(stdout)
    assert doc["results"][0]["image_id"] == "alice_red"
    assert doc["max_score"] == 20.0
    assert doc["preset"] == "table3_2_row11"


def test_describe_search_terms(capsys, store_path):
    code, stdout, _ = run(
        capsys, "describe-search", "--store", str(store_path),
        "--term", "upper_clothes:color=red", "--term", "pants:color=navy",
        "--top-k", "4", "--json",
    )
    assert code == EXIT_OK
    doc = json.loads(stdout)
    assert doc["max_score"] == 14.0
    top_two = {doc["results"][0]["image_id"], doc["results"][1]["image_id"]}
    assert top_two == {"alice_red", "bob_red"}

    code, stdout, _ = run(
        capsys, "describe-search", "--store", str(store_path),
        "--term", "upper_clothes:color=53.2,80.1,67.2:texture=uniform",
    )
    assert code == EXIT_OK
    assert "max achievable score: 8" in stdout
    assert " out of 8  [" in stdout


def test_describe_search_query_file(capsys, tmp_path, store_path):
    doc = {"regions": [{"region": "upper_clothes", "texture": "checkered"}]}
    qfile = tmp_path / "q.json"
    qfile.write_text(json.dumps(doc), encoding="utf-8")
    code, stdout, _ = run(
        capsys, "describe-search", "--store", str(store_path),
        "--query-file", str(qfile), "--top-k", "2", "--json",
    )
    assert code == EXIT_OK
    parsed = json.loads(stdout)
    ids = {r["image_id"] for r in parsed["results"]}
    assert ids == {"dave_check", "erin_check"}


def test_evaluate_writes_report_and_figures(capsys, tmp_path, market):
    report = tmp_path / "out" / "report.tsv"
    code, stdout, _ = run(
        capsys, "evaluate", "--dataset", str(market.root), "--masks", str(market.masks),
        "--report", str(report),
    )
    assert code == EXIT_OK
    assert "preset" in stdout and "table3_2_row11" in stdout
    assert f"wrote {report}" in stdout

    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "preset\trank1\trank10\tmAP\tnum_queries"
    assert lines[1] == "table3_2_row11\t100.0\t100.0\t100.0\t4"

    for suffix in ("_ranks.png", "_map.png"):
        fig_path = report.parent / f"report{suffix}"
        assert fig_path.is_file(), fig_path
        with Image.open(io.BytesIO(fig_path.read_bytes())) as img:
            assert img.size[0] > 100 and img.size[1] > 100


def test_presets_listing(capsys):
    code, stdout, _ = run(capsys, "presets")
    assert code == EXIT_OK
    assert "table3_2_row11" in stdout and "(default)" in stdout
    assert len(stdout.splitlines()) == 24

    code, stdout, _ = run(capsys, "presets", "--json")
    assert code == EXIT_OK
    doc = json.loads(stdout)
    assert doc["default"] == "table3_2_row11"
    assert len(doc["presets"]) == 24
    assert doc["presets"]["table3_2_row11"]["d_threshold"] == 40.0
