"""Dataset generation: corrupted image trees and perturbation frame stacks.

Layouts::

    <out>/<kind>/<severity>/<item>.<ext>   corruption trees (plus clean/0/)
    <out>/<kind>/<item>/frame_NN.png       perturbation trees

Every output derives from a stream keyed by (seed, item, kind, severity or
difficulty), so the trees are reproducible file-for-file regardless of
generation order or worker count.
"""

import os
from concurrent.futures import ProcessPoolExecutor

import PIL

from . import __version__, imaging
from .baselines import PACKAGED_PROFILES
from .corruptions import ALL_KINDS, BENCHMARK_KINDS, apply_corruption
from .errors import ParameterError, ValidationError
from .manifest import Manifest, sha256_bytes
from .perturbations import (COMMON_KINDS, PERTURBATION_KINDS,
                            NOISE_MODE_KINDS, PerturbationSpec,
                            perturbation_sequence)
from .randomness import RandomStream
from .schedules import SeveritySchedule

SOURCE_EXTS = (".png", ".jpg", ".jpeg")

DEFAULT_BASELINE = PACKAGED_PROFILES[0]


def codec_info() -> dict:
    """Identity of the image codec behind jpeg/png encoding.  JPEG output
    is only promised stable for a fixed codec version, so manifests record
    which one produced them."""
    return {"name": "Pillow", "version": PIL.__version__}

FORMAT_EXT = {"png": ".png", "jpeg": ".jpg"}

# frames are written at a fast compression level; the bytes are still
# deterministic for a fixed level
FRAME_COMPRESS_LEVEL = 1

LABELS_NAME = "labels.tsv"


def discover_sources(source_root) -> list:
    """All decodable source images under source_root as sorted
    (item_id, path) pairs; the item id is the extension-free relative path."""
    if not os.path.isdir(source_root):
        raise FileNotFoundError(f"source root {source_root} is not a directory")
    found = []
    for dirpath, dirnames, filenames in os.walk(source_root):
        dirnames.sort()
        for name in sorted(filenames):
            stem, ext = os.path.splitext(name)
            if ext.lower() not in SOURCE_EXTS:
                continue
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, source_root).replace(os.sep, "/")
            item = rel[: -len(ext)]
            found.append((item, full))
    if not found:
        raise ValidationError(f"no source images under {source_root}")
    ids = [item for item, _ in found]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(
            f"source item ids collide after extension stripping: {dupes}")
    return found


def _copy_labels(source_root, out_root):
    src = os.path.join(source_root, LABELS_NAME)
    if os.path.exists(src):
        with open(src, "rb") as fh:
            data = fh.read()
        with open(os.path.join(out_root, LABELS_NAME), "wb") as fh:
            fh.write(data)


# ---------------------------------------------------------------------------
# corruption trees

def _gen_c_item(args):
    (item, path, src_rel, out_root, seed, kinds, severities, schedule, fmt,
     quality) = args
    try:
        img = imaging.load_image(path)
        ext = FORMAT_EXT[fmt]
        records = []
        # the clean copy is re-encoded like every corrupted image, so the
        # classifier sees one consistent pipeline
        data = imaging.encode_image(img, format=fmt, quality=quality)
        rel = f"clean/0/{item}{ext}"
        full = os.path.join(out_root, rel)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        with open(full, "wb") as fh:
            fh.write(data)
        records.append({
            "id": f"clean/0/{item}", "item": item, "source": src_rel,
            "kind": "clean", "severity": 0, "path": rel,
            "sha256": sha256_bytes(data),
        })
        for kind in kinds:
            for sev in severities:
                stream = RandomStream(seed, item, kind, sev)
                out = apply_corruption(img, kind, sev, stream, schedule)
                data = imaging.encode_image(out, format=fmt, quality=quality)
                rel = f"{kind}/{sev}/{item}{ext}"
                full = os.path.join(out_root, rel)
                os.makedirs(os.path.dirname(full), exist_ok=True)
                with open(full, "wb") as fh:
                    fh.write(data)
                records.append({
                    "id": f"{kind}/{sev}/{item}", "item": item,
                    "source": src_rel, "kind": kind, "severity": sev,
                    "path": rel, "sha256": sha256_bytes(data),
                })
    except Exception as exc:  # per-item: one bad source must not kill the run
        return [], {"item": item, "error": f"{type(exc).__name__}: {exc}"}
    return records, None


def generate_corruptions(source_root, out_root, seed: int = 0, kinds=None,
                         severities=None, schedule: SeveritySchedule = None,
                         format: str = "jpeg", quality: int = 85,
                         jobs: int = 1, log=None) -> Manifest:
    if format not in FORMAT_EXT:
        raise ParameterError(f"format must be png or jpeg, got {format!r}")
    if kinds is None:
        kinds = list(BENCHMARK_KINDS)
    for kind in kinds:
        if kind not in ALL_KINDS:
            raise ParameterError(f"unknown corruption kind {kind!r}")
    if severities is None:
        severities = [1, 2, 3, 4, 5]
    for sev in severities:
        if sev not in (1, 2, 3, 4, 5):
            raise ParameterError(f"severity {sev} out of range 1..5")
    if schedule is None:
        schedule = SeveritySchedule.default()
    sources = discover_sources(source_root)
    os.makedirs(out_root, exist_ok=True)

    tasks = [(item, path, os.path.relpath(path, source_root).replace(os.sep, "/"),
              out_root, seed, list(kinds), list(severities),
              schedule, format, quality) for item, path in sources]
    records = []
    errors = []

    def consume(results):
        for i, (recs, err) in enumerate(results):
            records.extend(recs)
            if err is not None:
                errors.append(err)
            if log:
                log(f"gen-c {tasks[i][0]} ({i + 1}/{len(tasks)})")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            consume(pool.map(_gen_c_item, tasks))
    else:
        consume(map(_gen_c_item, tasks))
    records.sort(key=lambda r: (r["kind"], r["severity"], r["item"]))

    man = Manifest(
        tree_kind="corruption", version=__version__, seed=seed,
        source_root=str(source_root), records=records, format=format,
        schedule_sha256=schedule.digest(),
        benchmark_only=all(k in BENCHMARK_KINDS for k in kinds),
        codec=codec_info(), baseline=DEFAULT_BASELINE, errors=errors,
    )
    man.write(out_root)
    _copy_labels(source_root, out_root)
    return man


# ---------------------------------------------------------------------------
# perturbation trees

def _gen_p_item(args):
    (item, path, src_rel, out_root, seed, kinds, n_frames, difficulty,
     schedule) = args
    try:
        img = imaging.load_image(path)
        records = []
        for kind in kinds:
            spec = PerturbationSpec(kind, n_frames, difficulty)
            stream = RandomStream(seed, item, kind, difficulty)
            rel_dir = f"{kind}/{item}"
            full_dir = os.path.join(out_root, rel_dir)
            os.makedirs(full_dir, exist_ok=True)
            hashes = []
            seq = perturbation_sequence(img, spec, stream, schedule=schedule)
            for j, frame in enumerate(seq):
                data = imaging.encode_image(
                    frame, format="png", compress_level=FRAME_COMPRESS_LEVEL)
                name = os.path.join(full_dir, f"frame_{j:02d}.png")
                with open(name, "wb") as fh:
                    fh.write(data)
                hashes.append(sha256_bytes(data))
            records.append({
                "id": f"{kind}/{item}", "item": item, "source": src_rel,
                "kind": kind,
                "mode": "noise" if kind in NOISE_MODE_KINDS else "temporal",
                "n_frames": n_frames, "path": rel_dir, "frame_sha256": hashes,
            })
    except Exception as exc:
        return [], {"item": item, "error": f"{type(exc).__name__}: {exc}"}
    return records, None


def generate_perturbations(source_root, out_root, seed: int = 0, kinds=None,
                           n_frames: int = 31, difficulty: str = "normal",
                           schedule: SeveritySchedule = None,
                           format: str = "png", jobs: int = 1,
                           log=None) -> Manifest:
    if format != "png":
        raise ParameterError(
            f"perturbation frames are png only, got format {format!r}")
    if kinds is None:
        kinds = list(COMMON_KINDS)
    for kind in kinds:
        if kind not in PERTURBATION_KINDS:
            raise ParameterError(f"unknown perturbation kind {kind!r}")
    # constructing a spec validates n_frames and difficulty up front
    PerturbationSpec(kinds[0], n_frames, difficulty)
    if schedule is None:
        schedule = SeveritySchedule.default()
    sources = discover_sources(source_root)
    os.makedirs(out_root, exist_ok=True)

    tasks = [(item, path, os.path.relpath(path, source_root).replace(os.sep, "/"),
              out_root, seed, list(kinds), n_frames, difficulty, schedule)
             for item, path in sources]
    records = []
    errors = []

    def consume(results):
        for i, (recs, err) in enumerate(results):
            records.extend(recs)
            if err is not None:
                errors.append(err)
            if log:
                log(f"gen-p {tasks[i][0]} ({i + 1}/{len(tasks)})")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            consume(pool.map(_gen_p_item, tasks))
    else:
        consume(map(_gen_p_item, tasks))
    records.sort(key=lambda r: (r["kind"], r["item"]))

    man = Manifest(
        tree_kind="perturbation", version=__version__, seed=seed,
        source_root=str(source_root), records=records, format="png",
        difficulty=difficulty, n_frames=n_frames,
        schedule_sha256=schedule.digest(),
        codec=codec_info(), baseline=DEFAULT_BASELINE, errors=errors,
    )
    man.write(out_root)
    _copy_labels(source_root, out_root)
    return man
