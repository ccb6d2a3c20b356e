"""Shared fixtures: the bundled synthetic corpus at two scales.

The full 50-image 224x224 corpus backs the heavyweight end-to-end
checks; a handful of 64x64 images keeps the unit tests fast.
"""
import os

import pytest

from corruption_bench import corpus as corpus_mod
from corruption_bench.imaging import load_image
from corruption_bench.randomness import RandomStream


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    corpus_mod.materialize(str(out))
    return str(out)


@pytest.fixture(scope="session")
def corpus_images(corpus_dir):
    """The bundled corpus as decoded (item, float image) pairs."""
    items = corpus_mod.corpus_items(corpus_mod.DEFAULT_COUNT)
    return [(item, load_image(os.path.join(corpus_dir, item + ".png")))
            for item in items]


@pytest.fixture(scope="session")
def small_images():
    """Ten 64x64 synthetic photos for cheap per-op checks."""
    return [corpus_mod.make_image(RandomStream(99, "small", i, 64), 64)
            for i in range(10)]
