"""Evaluation: turn prediction logs plus labels into robustness scores.

Prediction logs are UTF-8 JSONL.  Each line is an object with an ``id``
matching a manifest record, an optional ``frame`` index (perturbation
trees), and a ``topk`` list of distinct class ids, most probable first.
An optional first line of the form ``{"header": {...}}`` carries free-form
provenance (producing tool, model name) and is not a prediction.

Labels are TSV: item id, tab, integer class id.
"""

import json
import os

from .baselines import BaselineProfile
from .errors import FormatError, ValidationError
from .manifest import Manifest
from .metrics import (ErrorTable, RobustnessReport, flip_probability,
                      unstandardized_t5d)
from .perturbations import NOISE_MODE_KINDS

CLEAN_KIND = "clean"


# ---------------------------------------------------------------------------
# file formats

def read_labels(path) -> dict:
    labels = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(
                    f"{path}:{lineno}: expected 'id<TAB>class', got {line!r}")
            item, cls = parts
            if item in labels:
                raise FormatError(f"{path}:{lineno}: duplicate item {item!r}")
            try:
                labels[item] = int(cls)
            except ValueError:
                raise FormatError(
                    f"{path}:{lineno}: class {cls!r} is not an integer")
    if not labels:
        raise FormatError(f"{path}: no labels")
    return labels


def write_labels(path, labels: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in sorted(labels):
            fh.write(f"{item}\t{labels[item]}\n")


def read_prediction_log(path):
    """Parse a JSONL prediction log into (header, entries).

    header is the dict from an optional leading {"header": ...} line, else
    None.  Entries keep only the contract fields; unknown extras are
    tolerated and dropped.
    """
    header = None
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not valid JSON ({exc})")
            if not isinstance(obj, dict):
                raise FormatError(f"{path}:{lineno}: line is not an object")
            if lineno == 1 and set(obj) == {"header"}:
                header = obj["header"]
                continue
            if "id" not in obj or "topk" not in obj:
                raise FormatError(
                    f"{path}:{lineno}: entry needs 'id' and 'topk'")
            rid = obj["id"]
            topk = obj["topk"]
            frame = obj.get("frame", 0)
            if not isinstance(rid, str):
                raise FormatError(f"{path}:{lineno}: id must be a string")
            if (not isinstance(topk, list) or not topk
                    or any(not isinstance(c, int) or isinstance(c, bool)
                           or c < 0 for c in topk)):
                raise FormatError(
                    f"{path}:{lineno}: topk must be non-negative integers")
            if len(set(topk)) != len(topk):
                raise FormatError(f"{path}:{lineno}: topk has duplicates")
            if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
                raise FormatError(
                    f"{path}:{lineno}: frame must be a non-negative integer")
            entry = {"id": rid, "frame": frame, "topk": topk}
            if "model" in obj:
                entry["model"] = obj["model"]
            entries.append(entry)
    if not entries:
        raise FormatError(f"{path}: no prediction entries")
    return header, entries


def write_prediction_log(path, entries, header=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# log-vs-manifest validation

def validate_predictions(log, man: Manifest, labels=None) -> list:
    """Diagnostics for prediction log entries against a manifest (and
    optionally a label table).  Empty result means the log fully covers
    the tree."""
    entries = log
    diags = []
    # rank-6 saturation makes K >= 6 lists safe to truncate; shorter lists
    # can shift top-5 distances, so flag them on perturbation trees
    want_topk = 6 if man.tree_kind == "perturbation" else 1
    by_id = {r["id"]: r for r in man.records}
    seen = {}
    for e in entries:
        key = (e["id"], e["frame"])
        if e["id"] not in by_id:
            diags.append(f"log id {e['id']!r} not in manifest")
            continue
        if key in seen:
            diags.append(f"duplicate log entry for {e['id']} frame {e['frame']}")
            continue
        seen[key] = e
        if len(e["topk"]) < want_topk:
            diags.append(
                f"{e['id']} frame {e['frame']}: topk has {len(e['topk'])} "
                f"entries, need >= {want_topk}")
        if man.tree_kind == "perturbation":
            n = by_id[e["id"]].get("n_frames", 0)
            if e["frame"] >= n:
                diags.append(
                    f"{e['id']}: frame {e['frame']} out of range 0..{n - 1}")
        elif e["frame"] != 0:
            diags.append(f"{e['id']}: unexpected frame {e['frame']}")
    for rec in man.records:
        if man.tree_kind == "perturbation":
            n = rec.get("n_frames", 0)
            missing = [j for j in range(n) if (rec["id"], j) not in seen]
            if missing:
                diags.append(
                    f"{rec['id']}: no predictions for frames {missing[:4]}"
                    + ("..." if len(missing) > 4 else ""))
        else:
            if (rec["id"], 0) not in seen:
                diags.append(f"{rec['id']}: no prediction")
    if labels is not None:
        for item in sorted({r["item"] for r in man.records}):
            if item not in labels:
                diags.append(f"no label for item {item!r}")
    return diags


# ---------------------------------------------------------------------------
# scoring

def evaluate_corruptions(man: Manifest, entries, labels) -> ErrorTable:
    if man.tree_kind != "corruption":
        raise ValidationError("manifest does not describe a corruption tree")
    diags = validate_predictions(entries, man, labels)
    if diags:
        raise ValidationError(
            "log does not cover the tree: " + "; ".join(diags[:5]))
    top1 = {e["id"]: e["topk"][0] for e in entries}
    tallies = {}
    for rec in man.records:
        wrong = int(top1[rec["id"]] != labels[rec["item"]])
        key = (rec["kind"], rec["severity"])
        n_wrong, n_total = tallies.get(key, (0, 0))
        tallies[key] = (n_wrong + wrong, n_total + 1)
    clean = tallies.pop((CLEAN_KIND, 0), None)
    if clean is None:
        raise ValidationError(
            "tree has no clean/0 records: the clean error term E_clean "
            "needed for relative scores cannot be computed")
    errors = {}
    for (kind, sev), (n_wrong, n_total) in tallies.items():
        errors.setdefault(kind, {})[sev] = n_wrong / n_total
    return ErrorTable(clean[0] / clean[1], errors)


def evaluate_perturbations(man: Manifest, entries, stride: int = 1):
    """Pooled flip probability and mean top-5 displacement per kind."""
    if man.tree_kind != "perturbation":
        raise ValidationError("manifest does not describe a perturbation tree")
    diags = validate_predictions(entries, man)
    if diags:
        raise ValidationError(
            "log does not cover the tree: " + "; ".join(diags[:5]))
    frames = {}
    for e in entries:
        frames.setdefault(e["id"], {})[e["frame"]] = e["topk"]
    by_kind = {}
    for rec in man.records:
        seq = frames[rec["id"]]
        ordered = [seq[j] for j in range(rec["n_frames"])]
        mode = rec.get("mode") or (
            "noise" if rec["kind"] in NOISE_MODE_KINDS else "temporal")
        by_kind.setdefault((rec["kind"], mode), []).append(ordered)
    fps = {}
    ut5ds = {}
    for (kind, mode), seqs in sorted(by_kind.items()):
        # noise sequences are always scored against frame 0; the stride
        # option only re-pairs temporal sequences
        kind_stride = 1 if mode == "noise" else stride
        top1_seqs = [[t[0] for t in s] for s in seqs]
        fps[kind] = flip_probability(top1_seqs, mode, kind_stride)
        ut5ds[kind] = unstandardized_t5d(seqs, mode, kind_stride)
    return fps, ut5ds


def evaluate_run(tree_root, log_path, baseline: BaselineProfile,
                 labels_path=None, stride: int = 1) -> RobustnessReport:
    """Score one generated tree from its prediction log."""
    man = Manifest.read(tree_root)
    _, entries = read_prediction_log(log_path)
    if man.tree_kind == "corruption":
        if labels_path is None:
            labels_path = os.path.join(tree_root, "labels.tsv")
        labels = read_labels(labels_path)
        table = evaluate_corruptions(man, entries, labels)
        return RobustnessReport.from_corruption_results(
            table, baseline, manifest_sha256=man.digest())
    fps, ut5ds = evaluate_perturbations(man, entries, stride)
    return RobustnessReport.from_perturbation_results(
        fps, ut5ds, baseline, stride, manifest_sha256=man.digest())


# ---------------------------------------------------------------------------
# synthetic prediction logs (plumbing checks and worked examples)

def constant_log_entries(man: Manifest, class_id: int = 0, k: int = 6) -> list:
    """A classifier that never changes its mind: identical topk everywhere.

    Flip statistics of this log are exactly zero, which pins down the
    no-flip end of the scale end to end.
    """
    topk = [class_id + i for i in range(k)]
    entries = []
    for rec in man.records:
        if man.tree_kind == "perturbation":
            for j in range(rec["n_frames"]):
                entries.append({"id": rec["id"], "frame": j,
                                "topk": list(topk)})
        else:
            entries.append({"id": rec["id"], "frame": 0, "topk": list(topk)})
    return entries


def alternating_log_entries(man: Manifest, k: int = 6) -> list:
    """A classifier that tops out a disjoint class set on every other frame,
    so every adjacent temporal pair disagrees (flip probability one)."""
    even = [i for i in range(k)]
    odd = [100 + i for i in range(k)]
    entries = []
    for rec in man.records:
        if man.tree_kind == "perturbation":
            for j in range(rec["n_frames"]):
                topk = even if j % 2 == 0 else odd
                entries.append({"id": rec["id"], "frame": j,
                                "topk": list(topk)})
        else:
            entries.append({"id": rec["id"], "frame": 0, "topk": list(even)})
    return entries
