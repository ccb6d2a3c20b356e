"""Synthetic source corpus: deterministic, license-free test imagery.

Fifty 224x224 images built from a handful of low-frequency color gratings
plus one bright highlight blob.  The construction targets the properties
the corruption and perturbation machinery assumes of natural photos:

* smooth: shifting one pixel moves intensities by well under 0.05 RMS;
* colorful with moderate saturation, so hue/saturation edits register;
* mean luminance in roughly 0.30..0.45 with a near-white highlight, so a
  brightening haze overlay raises mean luminance at every strength.

Run ``python -m corruption_bench.corpus <out-dir>`` to materialize the
corpus (images plus labels.tsv).
"""

import argparse
import os
import sys

import numpy as np

from . import imaging
from .evaluate import write_labels
from .randomness import RandomStream

CORPUS_SEED = 1101
DEFAULT_COUNT = 50
DEFAULT_SIZE = 224
N_CLASSES = 10


def make_image(stream: RandomStream, size: int = DEFAULT_SIZE) -> np.ndarray:
    g = stream.generator()
    yy, xx = np.mgrid[0:size, 0:size] / float(size)
    img = np.zeros((size, size, 3))
    img += g.uniform(0.25, 0.45, 3).reshape(1, 1, 3)
    # a few low-frequency gratings per channel keep the image smooth but
    # structured; frequencies stay under ~2.5 cycles across the frame
    for _ in range(4):
        fy = g.uniform(-2.2, 2.2)
        fx = g.uniform(-2.2, 2.2)
        phase = g.uniform(0.0, 2.0 * np.pi)
        amp = g.uniform(0.04, 0.11, 3)
        wave = np.sin(2.0 * np.pi * (fy * yy + fx * xx) + phase)
        img += amp.reshape(1, 1, 3) * wave[:, :, None]
    img = np.clip(img, 0.02, 0.85)
    # steer the pre-highlight mean luminance into a band below half of the
    # highlight peak
    lum = imaging.luminance(img).mean()
    img = np.clip(img + (g.uniform(0.33, 0.41) - lum), 0.02, 0.85)
    # one bright highlight so every image has a near-white region
    hy, hx = g.uniform(0.2, 0.8, 2)
    sig = g.uniform(0.05, 0.10)
    d2 = (yy - hy) ** 2 + (xx - hx) ** 2
    blob = np.exp(-d2 / (2.0 * sig * sig))[:, :, None]
    img = img + (1.0 - img) * blob
    return imaging.as_buffer(img)


def corpus_items(count: int = DEFAULT_COUNT):
    width = max(3, len(str(count - 1)))
    return [f"img_{i:0{width}d}" for i in range(count)]


def materialize(out_dir, count: int = DEFAULT_COUNT,
                size: int = DEFAULT_SIZE) -> list:
    """Write the corpus; returns sorted (item, path) pairs."""
    os.makedirs(out_dir, exist_ok=True)
    out = []
    labels = {}
    for i, item in enumerate(corpus_items(count)):
        stream = RandomStream(CORPUS_SEED, "corpus", item, size)
        img = make_image(stream, size)
        path = os.path.join(out_dir, f"{item}.png")
        imaging.save_image(img, path, format="png")
        labels[item] = i % N_CLASSES
        out.append((item, path))
    write_labels(os.path.join(out_dir, "labels.tsv"), labels)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="python -m corruption_bench.corpus",
        description="materialize the synthetic source corpus")
    ap.add_argument("out_dir")
    ap.add_argument("--count", type=int, default=DEFAULT_COUNT)
    ap.add_argument("--size", type=int, default=DEFAULT_SIZE)
    args = ap.parse_args(argv)
    items = materialize(args.out_dir, args.count, args.size)
    print(f"wrote {len(items)} images and labels.tsv to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
