import shutil
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

HARNESS = shutil.which("corruption-bench")


def harness(*argv):
    """Invoke the benchmark harness CLI; the adapter talks to it only
    through files and this entry point."""
    if HARNESS:
        cmd = [HARNESS, *argv]
    else:
        cmd = [sys.executable, "-m", "corruption_bench.cli", *argv]
    return subprocess.run(cmd, capture_output=True, text=True)


@pytest.fixture(scope="session")
def source_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("sources")
    rng = np.random.default_rng(424)
    lines = []
    for i in range(10):
        arr = (rng.uniform(size=(24, 24, 3)) * 255).astype(np.uint8)
        Image.fromarray(arr).save(root / f"img_{i:03d}.png")
        lines.append(f"img_{i:03d}\t{i % 10}\n")
    (root / "labels.tsv").write_text("".join(lines))
    return str(root)


@pytest.fixture(scope="session")
def ctree(source_dir, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("ctree"))
    r = harness("gen-c", source_dir, out, "--seed", "0", "--kinds", "fog",
                "--format", "png")
    assert r.returncode == 0, r.stderr
    return out


@pytest.fixture(scope="session")
def ptree(source_dir, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("ptree"))
    r = harness("gen-p", source_dir, out, "--seed", "0", "--kinds",
                "gaussian_noise,translate")
    assert r.returncode == 0, r.stderr
    return out
