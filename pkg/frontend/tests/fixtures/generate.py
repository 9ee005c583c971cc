"""Regenerate the UI test fixtures from the real HTTP service.

Builds the synthetic corpus used by the Python test suite, serves it
with the in-process test client, and writes each response body to disk
byte-for-byte as received.  The UI tests treat these files as the
ground truth for rendered scores, so never edit them by hand; rerun
this script instead (from the repository root):

    python3 frontend/tests/fixtures/generate.py
"""

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[3]
sys.path.insert(0, str(REPO / "tests"))

from fastapi.testclient import TestClient

from conftest import CORPUS_PEOPLE, write_people
from labreid.features import PipelineConfig
from labreid.presets import DEFAULT_PRESET
from labreid.service import create_app
from labreid.store import build_index

OUT = Path(__file__).resolve().parent

# The shared corpus plus two people whose clothes sit close to the
# packaged "red" and "black" table entries, so the color query has
# genuine hits to put on top of the grid.
PEOPLE = CORPUS_PEOPLE + (
    ("ruby_red", dict(shirt_rgb=(250, 10, 10), pants_rgb=(15, 15, 15), seed=21)),
    ("scarlett_red", dict(shirt_rgb=(235, 25, 20), pants_rgb=(22, 22, 26), seed=22)),
)

CHECKERED_REQUEST = {
    "regions": [{"region": "upper_clothes", "texture": "checkered"}],
    "top_k": 10,
    "preset": DEFAULT_PRESET,
}

RED_BLACK_REQUEST = {
    "regions": [
        {"region": "upper_clothes", "color": "red"},
        {"region": "pants", "color": "black"},
    ],
    "top_k": 10,
    "preset": DEFAULT_PRESET,
}

# Unbuildable through the form, but the service accepts the shape and
# rejects it; keeps the error envelope honest in UI tests.
TEXTURE_ON_PANTS_REQUEST = {
    "regions": [{"region": "pants", "texture": "dots"}],
    "top_k": 10,
    "preset": DEFAULT_PRESET,
}


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="labreid-ui-fixtures-"))
    images, masks = tmp / "images", tmp / "masks"
    write_people(images, masks, PEOPLE)
    store = build_index(images, masks, PipelineConfig())
    client = TestClient(create_app(store, images_dir=images))

    scenarios = {}

    def capture(name: str, method: str, path: str, request_doc=None, **kw):
        resp = client.request(method, path, **kw)
        (OUT / f"{name}.response.json").write_bytes(resp.content)
        entry = {"method": method, "path": path, "status": resp.status_code,
                 "response": f"{name}.response.json"}
        if request_doc is not None:
            req_file = f"{name}.request.json"
            (OUT / req_file).write_text(json.dumps(request_doc, indent=2) + "\n")
            entry["request"] = req_file
        scenarios[name] = entry

    capture("health", "GET", "/health")
    capture("presets", "GET", "/presets")
    capture("item_alice_red", "GET", "/items/alice_red")
    capture("search_checkered_upper", "POST", "/search/description",
            request_doc=CHECKERED_REQUEST, json=CHECKERED_REQUEST)
    capture("search_red_upper_black_pants", "POST", "/search/description",
            request_doc=RED_BLACK_REQUEST, json=RED_BLACK_REQUEST)
    capture("error_texture_on_pants", "POST", "/search/description",
            request_doc=TEXTURE_ON_PANTS_REQUEST, json=TEXTURE_ON_PANTS_REQUEST)

    (OUT / "meta.json").write_text(json.dumps({"scenarios": scenarios}, indent=2) + "\n")
    for name, entry in scenarios.items():
        print(f"{entry['status']} {entry['method']} {entry['path']} -> {name}")


if __name__ == "__main__":
    main()
