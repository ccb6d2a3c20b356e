"""Run a classifier over a generated tree and write its prediction log.

The only coupling to the benchmark harness is the file contract: the
tree's ``manifest.json`` names every unit to predict, and the output is
line-delimited JSON records {id, frame, topk} the harness scores as-is.
Records are emitted in manifest order with frames ascending, so reruns
with the same inputs produce byte-identical logs.
"""

import json
import os

import numpy as np
from PIL import Image

from .errors import ConfigError
from .models import ModelRef, softmax


def read_manifest(tree_root) -> dict:
    path = os.path.join(tree_root, "manifest.json")
    with open(path, "r", encoding="utf-8") as fh:
        man = json.load(fh)
    if man.get("tree_kind") not in ("corruption", "perturbation"):
        raise ConfigError(f"{path}: unrecognized tree kind")
    return man


def _unit_paths(tree_root, man):
    """Yield (record id, frame index, image path) for every prediction the
    log must contain."""
    for rec in man["records"]:
        if man["tree_kind"] == "corruption":
            yield rec["id"], 0, os.path.join(tree_root, rec["path"])
        else:
            for j in range(rec["n_frames"]):
                yield rec["id"], j, os.path.join(
                    tree_root, rec["path"], f"frame_{j:02d}.png")


def load_input(path, model: ModelRef) -> np.ndarray:
    with Image.open(path) as im:
        im = im.convert("RGB")
        if model.resize:
            w, h = im.size
            scale = model.resize / min(w, h)
            im = im.resize((max(1, round(w * scale)),
                            max(1, round(h * scale))), Image.BILINEAR)
        arr = np.asarray(im, dtype=np.float64) / 255.0
    if model.crop:
        h, w = arr.shape[:2]
        if model.crop > min(h, w):
            raise ConfigError(f"crop {model.crop} exceeds image side "
                              f"{min(h, w)}")
        y = (h - model.crop) // 2
        x = (w - model.crop) // 2
        arr = arr[y:y + model.crop, x:x + model.crop]
    return (arr - model.mean) / model.std


def ten_crop_views(arr: np.ndarray) -> np.ndarray:
    """Four corner crops plus the center, each with its mirror: ten views
    at 7/8 of the short side."""
    h, w = arr.shape[:2]
    c = max(1, round(0.875 * min(h, w)))
    corners = [(0, 0), (0, w - c), (h - c, 0), (h - c, w - c),
               ((h - c) // 2, (w - c) // 2)]
    views = []
    for y, x in corners:
        crop = arr[y:y + c, x:x + c]
        views.append(crop)
        views.append(crop[:, ::-1])
    return np.stack(views)


def _rankings(probs: np.ndarray, topk: int) -> list:
    order = np.argsort(-probs, axis=-1, kind="stable")
    return [[int(c) for c in row[:topk]] for row in order]


def run_inference(model: ModelRef, tree_root, out_log, batch: int = 32,
                  ten_crop: bool = False):
    """Predict every unit of the tree; returns (records written, per-item
    errors).  A failed decode is recorded and skipped, the run continues."""
    if batch < 1:
        raise ConfigError(f"batch must be positive, got {batch}")
    predict = model.load()
    man = read_manifest(tree_root)
    errors = []
    written = 0

    with open(out_log, "w", encoding="utf-8") as fh:
        header = {"model": model.spec, "topk": model.topk,
                  "ten_crop": bool(ten_crop),
                  "preprocess": model.preprocess_header()}
        fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")

        pending = []  # (id, frame, array)

        def flush():
            nonlocal written
            if not pending:
                return
            if ten_crop:
                # each image contributes a 10-view average of its softmax
                probs = []
                for _, _, arr in pending:
                    probs.append(predict(ten_crop_views(arr)).mean(axis=0))
                probs = np.stack(probs)
            else:
                probs = predict(np.stack([arr for _, _, arr in pending]))
            for (rid, frame, _), topk in zip(pending,
                                             _rankings(probs, model.topk)):
                entry = {"frame": frame, "id": rid, "model": model.spec,
                         "topk": topk}
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                written += 1
            pending.clear()

        last_shape = None
        for rid, frame, path in _unit_paths(tree_root, man):
            try:
                arr = load_input(path, model)
            except (OSError, ValueError) as exc:
                errors.append({"id": rid, "frame": frame,
                               "error": f"{type(exc).__name__}: {exc}"})
                continue
            if last_shape is not None and arr.shape != last_shape:
                flush()  # batches must be rectangular
            last_shape = arr.shape
            pending.append((rid, frame, arr))
            if len(pending) >= batch:
                flush()
        flush()
    return written, errors
