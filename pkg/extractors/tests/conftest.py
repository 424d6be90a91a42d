import json
import os
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

CAPTIONS = [
    "a dog on a couch",
    "two cats near a window",
    "a man is in front of the blue car",
    "three birds above the fence",
    "a bowl on top of the table",
    "a horse behind the barn",
    "one kite far in the sky",
    "a bike left of the door",
    "four cups under the shelf",
    "a boat between two piers",
]


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Ten deterministic noise images."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(2024)
    for i in range(10):
        pixels = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        Image.fromarray(pixels, "RGB").save(root / f"img{i}.png")
    return root


@pytest.fixture(scope="session")
def image_manifest(image_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("manifests") / "images.jsonl"
    with open(path, "w") as fh:
        for i, caption in enumerate(CAPTIONS):
            fh.write(json.dumps({
                "id": f"img{i}",
                "image": str(image_dir / f"img{i}.png"),
                "expected_class": ["dark", "dusk", "mid", "bright"][i % 4],
                "gt_counts": {"dark": float(i % 3 + 1)},
                "caption": caption,
            }) + "\n")
    return str(path)


def run_validate(*paths):
    """Validate artifacts through the metrics engine's CLI (external interface)."""
    cmd = [sys.executable, "-m", "t2ieval.cli", "validate", *map(str, paths)]
    return subprocess.run(cmd, capture_output=True, text=True)


def assert_all_pass(*paths):
    result = run_validate(*paths)
    assert result.returncode == 0, result.stdout + result.stderr
    assert "FAIL" not in result.stdout
    assert result.stdout.count("PASS") == len(paths)
