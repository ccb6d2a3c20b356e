"""Manifest integrity checks, label and prediction-log IO, and the
log-to-score pipeline on small hand-built fixtures."""
import json
import os

import numpy as np
import pytest

from corruption_bench.baselines import resolve_baseline
from corruption_bench.errors import (FormatError, ParameterError,
                                     ValidationError)
from corruption_bench.evaluate import (alternating_log_entries,
                                       constant_log_entries,
                                       evaluate_corruptions,
                                       evaluate_perturbations, read_labels,
                                       read_prediction_log, validate_predictions,
                                       write_labels, write_prediction_log)
from corruption_bench.imaging import save_image
from corruption_bench.manifest import (Manifest, sha256_bytes, sha256_file,
                                       validate_tree)
from corruption_bench.metrics import flip_probability, unstandardized_t5d
from corruption_bench.randomness import RandomStream


def tiny_image(*tags, size=24):
    g = RandomStream(31, "tiny", *tags).generator()
    return g.uniform(size=(size, size, 3))


def corruption_manifest(items=("a", "b"), kinds=("fog",), fmt="png"):
    records = []
    for item in items:
        records.append({"id": f"clean/0/{item}", "item": item,
                        "source": f"{item}.png", "kind": "clean",
                        "severity": 0, "path": f"clean/0/{item}.png",
                        "sha256": "0" * 64})
        for kind in kinds:
            for sev in range(1, 6):
                records.append({
                    "id": f"{kind}/{sev}/{item}", "item": item,
                    "source": f"{item}.png", "kind": kind, "severity": sev,
                    "path": f"{kind}/{sev}/{item}.png", "sha256": "0" * 64})
    return Manifest("corruption", "1.0", 0, "/src", records, fmt)


def perturbation_manifest(n_frames=4):
    records = []
    for item, kind in (("a", "gaussian_noise"), ("b", "gaussian_noise"),
                       ("a", "translate")):
        records.append({
            "id": f"{kind}/{item}", "item": item, "source": f"{item}.png",
            "kind": kind,
            "mode": "noise" if kind == "gaussian_noise" else "temporal",
            "n_frames": n_frames, "path": f"{kind}/{item}",
            "frame_sha256": ["0" * 64] * n_frames})
    return Manifest("perturbation", "1.0", 0, "/src", records, "png",
                    n_frames=n_frames)


# ---------------------------------------------------------------------------
# manifest

def test_manifest_round_trip_and_digest(tmp_path):
    man = corruption_manifest()
    again = Manifest.from_dict(man.to_dict())
    assert again.to_json() == man.to_json()
    assert again.digest() == man.digest()
    man.write(tmp_path)
    assert Manifest.read(str(tmp_path)).digest() == man.digest()
    # digest is sensitive to record content
    man.records[0]["sha256"] = "1" * 64
    assert Manifest.read(str(tmp_path)).digest() != man.digest()


def test_manifest_validation(tmp_path):
    with pytest.raises(ValidationError):
        Manifest("severity", "1.0", 0, "/src", [], "png")
    with pytest.raises(ValidationError):
        Manifest.from_dict({"tree_kind": "corruption"})
    junk = tmp_path / "manifest.json"
    junk.write_text("{not json")
    with pytest.raises(FormatError):
        Manifest.read(str(junk))
    junk.write_text("[1, 2]")
    with pytest.raises(FormatError):
        Manifest.read(str(junk))
    with pytest.raises(FileNotFoundError):
        Manifest.read(str(tmp_path / "nope.json"))


def test_manifest_completeness_flag():
    man = corruption_manifest()
    assert man.complete
    man.errors.append({"item": "z", "error": "ValueError: boom"})
    assert not man.complete
    assert Manifest.from_dict(man.to_dict()).errors == man.errors


def build_tree(root, manifest_records=True):
    """Two real files under a corruption layout, with truthful hashes."""
    records = []
    for item in ("a", "b"):
        rel = f"fog/3/{item}.png"
        path = os.path.join(root, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        save_image(tiny_image(item), path)
        records.append({"id": f"fog/3/{item}", "item": item,
                        "source": f"{item}.png", "kind": "fog", "severity": 3,
                        "path": rel, "sha256": sha256_file(path)})
    man = Manifest("corruption", "1.0", 0, "/src", records, "png")
    man.write(root)
    return man


def test_validate_tree_accepts_sound_tree(tmp_path):
    build_tree(str(tmp_path))
    assert validate_tree(str(tmp_path)) == []


def test_validate_tree_catches_tampering(tmp_path):
    build_tree(str(tmp_path))
    target = tmp_path / "fog" / "3" / "a.png"
    save_image(tiny_image("evil"), str(target))
    diags = validate_tree(str(tmp_path))
    assert len(diags) == 1 and "hash mismatch" in diags[0]
    assert validate_tree(str(tmp_path), check_hashes=False) == []
    target.unlink()
    diags = validate_tree(str(tmp_path))
    assert len(diags) == 1 and "missing file" in diags[0]


def test_validate_tree_catches_manifest_rot(tmp_path):
    man = build_tree(str(tmp_path))
    man.records.append(dict(man.records[0]))  # duplicate id
    man.errors.append({"item": "c", "error": "OSError: truncated"})
    man.write(str(tmp_path))
    diags = validate_tree(str(tmp_path))
    assert any("duplicate record id" in d for d in diags)
    assert any("incomplete" in d for d in diags)
    assert validate_tree(str(tmp_path / "missing")) == [
        f"{tmp_path / 'missing'}: no manifest.json"]


def test_validate_tree_checks_frames(tmp_path):
    root = str(tmp_path)
    rel = "translate/a"
    os.makedirs(os.path.join(root, rel))
    hashes = []
    for j in range(3):
        p = os.path.join(root, rel, f"frame_{j:02d}.png")
        save_image(tiny_image("f", j), p)
        hashes.append(sha256_file(p))
    rec = {"id": "translate/a", "item": "a", "source": "a.png",
           "kind": "translate", "mode": "temporal", "n_frames": 3,
           "path": rel, "frame_sha256": hashes}
    man = Manifest("perturbation", "1.0", 0, "/src", [rec], "png", n_frames=3)
    man.write(root)
    assert validate_tree(root) == []
    save_image(tiny_image("evil"), os.path.join(root, rel, "frame_01.png"))
    diags = validate_tree(root)
    assert len(diags) == 1 and "frame 1" in diags[0]
    rec["frame_sha256"] = hashes[:2]
    man.write(root)
    assert any("frame hash count" in d for d in validate_tree(root))


# ---------------------------------------------------------------------------
# labels and logs

def test_labels_round_trip(tmp_path):
    path = str(tmp_path / "labels.tsv")
    labels = {"img_000": 3, "img_001": 7}
    write_labels(path, labels)
    assert read_labels(path) == labels


def test_labels_format_errors(tmp_path):
    path = str(tmp_path / "labels.tsv")
    for bad, needle in [("img_000\t1\textra\n", ":1:"),
                        ("img_000\t1\nimg_000\t2\n", "duplicate"),
                        ("img_000\tcat\n", "not an integer"),
                        ("", "no labels")]:
        with open(path, "w") as fh:
            fh.write(bad)
        with pytest.raises(FormatError, match="labels"):
            read_labels(path)


def test_prediction_log_round_trip(tmp_path):
    path = str(tmp_path / "preds.jsonl")
    entries = [{"id": "fog/3/a", "frame": 0, "topk": [4, 1, 0, 2, 3, 9],
                "model": "toy"},
               {"id": "fog/3/b", "frame": 0, "topk": [1, 2, 3, 4, 5, 6]}]
    write_prediction_log(path, entries, header={"model": "toy", "crop": 1})
    header, got = read_prediction_log(path)
    assert header == {"model": "toy", "crop": 1}
    assert got == entries


def test_prediction_log_tolerates_extras_and_defaults_frame(tmp_path):
    path = str(tmp_path / "preds.jsonl")
    with open(path, "w") as fh:
        fh.write(json.dumps({"id": "x", "topk": [1, 2], "score": 0.9}) + "\n")
    _, got = read_prediction_log(path)
    assert got == [{"id": "x", "frame": 0, "topk": [1, 2]}]


def test_prediction_log_errors_carry_line_numbers(tmp_path):
    path = str(tmp_path / "preds.jsonl")
    good = json.dumps({"id": "x", "frame": 0, "topk": [1]})
    cases = [
        (good + "\n{oops\n", ":2:"),
        (good + "\n[1]\n", ":2:"),
        ('{"id": "x"}\n', "'id' and 'topk'"),
        ('{"id": 5, "topk": [1]}\n', "id must be"),
        ('{"id": "x", "topk": []}\n', "topk"),
        ('{"id": "x", "topk": [1, 1]}\n', "duplicates"),
        ('{"id": "x", "topk": [1, -2]}\n', "topk"),
        ('{"id": "x", "topk": [true, false]}\n', "topk"),
        ('{"id": "x", "topk": [1], "frame": -1}\n', "frame"),
        ("", "no prediction entries"),
    ]
    for text, needle in cases:
        with open(path, "w") as fh:
            fh.write(text)
        with pytest.raises(FormatError, match=needle.replace("[", r"\[")):
            read_prediction_log(path)


# ---------------------------------------------------------------------------
# log-vs-manifest validation

def test_validate_predictions_full_coverage_passes():
    man = corruption_manifest()
    labels = {"a": 0, "b": 1}
    entries = constant_log_entries(man)
    assert validate_predictions(entries, man, labels) == []


def test_validate_predictions_diagnostics():
    man = corruption_manifest()
    entries = constant_log_entries(man)
    entries.append({"id": "fog/9/z", "frame": 0, "topk": [1]})
    entries.append(dict(entries[0]))
    entries[1] = dict(entries[1], frame=2)
    dropped = entries.pop(2)
    diags = validate_predictions(entries, man, {"a": 0})
    assert any("not in manifest" in d for d in diags)
    assert any("duplicate log entry" in d for d in diags)
    assert any("unexpected frame" in d for d in diags)
    assert any(dropped["id"] in d and "no prediction" in d for d in diags)
    assert any("no label for item 'b'" in d for d in diags)


def test_validate_predictions_perturbation_rules():
    man = perturbation_manifest()
    entries = constant_log_entries(man)
    assert validate_predictions(entries, man) == []
    short = [dict(e, topk=e["topk"][:5]) for e in entries]
    diags = validate_predictions(short, man)
    assert diags and all("need >= 6" in d for d in diags)
    entries2 = constant_log_entries(man)
    entries2[0] = dict(entries2[0], frame=4)
    diags = validate_predictions(entries2, man)
    assert any("out of range 0..3" in d for d in diags)
    assert any("no predictions for frames [0]" in d for d in diags)
    # corruption trees do not demand six entries
    cman = corruption_manifest()
    one_deep = [dict(e, topk=e["topk"][:1])
                for e in constant_log_entries(cman)]
    assert validate_predictions(one_deep, cman, {"a": 0, "b": 1}) == []


# ---------------------------------------------------------------------------
# scoring pipeline

ITEMS = ("a", "b", "c", "d")
LABELS = {item: i for i, item in enumerate(ITEMS)}


def fog_fixture_entries(man):
    """Severity s gets min(s, 4) wrong answers out of 4; clean gets 1."""
    entries = []
    for rec in man.records:
        right = LABELS[rec["item"]]
        idx = ITEMS.index(rec["item"])
        wrong_count = 1 if rec["kind"] == "clean" else min(rec["severity"], 4)
        top1 = right + 50 if idx < wrong_count else right
        entries.append({"id": rec["id"], "frame": 0, "topk": [top1]})
    return entries


def test_evaluate_corruptions_hand_fixture():
    man = corruption_manifest(items=ITEMS)
    table = evaluate_corruptions(man, fog_fixture_entries(man), LABELS)
    assert table.clean_error == 0.25
    assert table.error("fog", 1) == 0.25
    assert table.error("fog", 3) == 0.75
    assert table.error("fog", 5) == 1.0
    assert table.sum_errors("fog") == pytest.approx(3.5)
    base = resolve_baseline("alexnet-paper")
    from corruption_bench.metrics import corruption_error
    assert corruption_error(table, "fog", base) == pytest.approx(
        100.0 * 3.5 / base.ce_denominator("fog"))


def test_evaluate_corruptions_rejects_gaps_and_missing_clean():
    man = corruption_manifest(items=ITEMS)
    entries = fog_fixture_entries(man)
    with pytest.raises(ValidationError, match="does not cover"):
        evaluate_corruptions(man, entries[:-1], LABELS)
    bare = Manifest("corruption", "1.0", 0, "/src",
                    [r for r in man.records if r["kind"] != "clean"], "png")
    with pytest.raises(ValidationError, match="E_clean"):
        evaluate_corruptions(bare, fog_fixture_entries(bare), LABELS)
    with pytest.raises(ValidationError, match="corruption tree"):
        evaluate_corruptions(perturbation_manifest(), [], LABELS)


def seq_entries(man, top1_by_id):
    """Expand per-sequence top-1 lists into k=6 log entries."""
    entries = []
    for rec in man.records:
        for j, c in enumerate(top1_by_id[rec["id"]]):
            topk = [c] + [100 + c * 7 + i for i in range(5)]
            entries.append({"id": rec["id"], "frame": j, "topk": topk})
    return entries


def test_evaluate_perturbations_hand_fixture():
    man = perturbation_manifest(n_frames=4)
    top1 = {"gaussian_noise/a": [7, 7, 8, 7],
            "gaussian_noise/b": [7, 8, 8, 8],
            "translate/a": [1, 1, 2, 2]}
    entries = seq_entries(man, top1)
    fps, ut5ds = evaluate_perturbations(man, entries, stride=1)
    assert fps["gaussian_noise"] == pytest.approx(4 / 6)
    assert fps["translate"] == pytest.approx(1 / 3)
    # the glue must agree with the metric layer applied to the same stacks
    frames = {}
    for e in entries:
        frames.setdefault(e["id"], {})[e["frame"]] = e["topk"]
    noise_stacks = [[frames[i][j] for j in range(4)]
                    for i in ("gaussian_noise/a", "gaussian_noise/b")]
    assert ut5ds["gaussian_noise"] == pytest.approx(
        unstandardized_t5d(noise_stacks, "noise"))
    assert fps["gaussian_noise"] == pytest.approx(flip_probability(
        [[t[0] for t in s] for s in noise_stacks], "noise"))
    fps2, _ = evaluate_perturbations(man, entries, stride=2)
    assert fps2["gaussian_noise"] == fps["gaussian_noise"]
    assert fps2["translate"] == pytest.approx(1.0)  # pairs (0,2) and (1,3)
    with pytest.raises(ValidationError, match="perturbation tree"):
        evaluate_perturbations(corruption_manifest(), [])


def test_synthetic_logs_pin_the_flip_scale():
    man = perturbation_manifest(n_frames=6)
    fps, ut5ds = evaluate_perturbations(man, constant_log_entries(man))
    assert set(fps.values()) == {0.0}
    assert set(ut5ds.values()) == {0.0}
    fps, _ = evaluate_perturbations(man, alternating_log_entries(man))
    assert fps["translate"] == 1.0
