"""Dataset manifests: the JSON sidecar written next to every generated tree.

The manifest pins everything needed to reproduce or audit a run: toolkit
version, generation seed, severity-schedule digest, output format, and one
record per generated unit (a corrupted image, or a perturbation sequence)
with content hashes.  Two runs agree iff their manifest digests agree.
"""

import hashlib
import json
import os

from .errors import FormatError, ValidationError

MANIFEST_NAME = "manifest.json"

TREE_KINDS = ("corruption", "perturbation")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """In-memory form of manifest.json for one generated tree."""

    def __init__(self, tree_kind: str, version: str, seed: int,
                 source_root: str, records: list, format: str,
                 schedule_sha256: str = None, benchmark_only: bool = None,
                 difficulty: str = None, n_frames: int = None,
                 codec: dict = None, baseline: str = None,
                 errors: list = None):
        if tree_kind not in TREE_KINDS:
            raise ValidationError(f"tree kind must be one of {TREE_KINDS}")
        self.tree_kind = tree_kind
        self.version = version
        self.seed = int(seed)
        self.source_root = source_root
        self.records = list(records)
        self.format = format
        self.schedule_sha256 = schedule_sha256
        self.benchmark_only = benchmark_only
        self.difficulty = difficulty
        self.n_frames = n_frames
        self.codec = codec
        self.baseline = baseline
        self.errors = list(errors or [])

    @property
    def complete(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        d = {
            "tree_kind": self.tree_kind,
            "version": self.version,
            "seed": self.seed,
            "source_root": self.source_root,
            "format": self.format,
            "complete": self.complete,
            "records": self.records,
        }
        if self.schedule_sha256 is not None:
            d["schedule_sha256"] = self.schedule_sha256
        if self.benchmark_only is not None:
            d["benchmark_only"] = self.benchmark_only
        if self.difficulty is not None:
            d["difficulty"] = self.difficulty
        if self.n_frames is not None:
            d["n_frames"] = self.n_frames
        if self.codec is not None:
            d["codec"] = self.codec
        if self.baseline is not None:
            d["baseline"] = self.baseline
        if self.errors:
            d["errors"] = self.errors
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return sha256_bytes(self.to_json().encode("utf-8"))

    def write(self, root) -> str:
        path = os.path.join(root, MANIFEST_NAME)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
        return path

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        try:
            return cls(
                tree_kind=d["tree_kind"], version=d["version"],
                seed=d["seed"], source_root=d["source_root"],
                records=d["records"], format=d["format"],
                schedule_sha256=d.get("schedule_sha256"),
                benchmark_only=d.get("benchmark_only"),
                difficulty=d.get("difficulty"),
                n_frames=d.get("n_frames"),
                codec=d.get("codec"),
                baseline=d.get("baseline"),
                errors=d.get("errors"),
            )
        except KeyError as exc:
            raise ValidationError(f"manifest missing field {exc}") from exc

    @classmethod
    def read(cls, root_or_path) -> "Manifest":
        path = root_or_path
        if os.path.isdir(path):
            path = os.path.join(path, MANIFEST_NAME)
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        with open(path, "r", encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(d, dict):
            raise FormatError(f"{path}: manifest must be a JSON object")
        return cls.from_dict(d)

    # -- record iteration helpers ------------------------------------------

    def record_ids(self) -> list:
        return [r["id"] for r in self.records]

    def items(self) -> list:
        return sorted({r["item"] for r in self.records})


def validate_tree(root, check_hashes: bool = True) -> list:
    """Check a generated tree against its manifest; returns diagnostics
    (empty list means the tree is sound)."""
    diags = []
    try:
        man = Manifest.read(root)
    except FileNotFoundError:
        return [f"{root}: no {MANIFEST_NAME}"]
    except (FormatError, ValidationError) as exc:
        return [str(exc)]

    for err in man.errors:
        diags.append(f"generation was incomplete: {err.get('item')}: "
                     f"{err.get('error')}")
    seen_ids = set()
    for rec in man.records:
        rid = rec.get("id")
        if rid is None:
            diags.append("record without id")
            continue
        if rid in seen_ids:
            diags.append(f"{rid}: duplicate record id")
            continue
        seen_ids.add(rid)
        if man.tree_kind == "corruption":
            path = os.path.join(root, rec["path"])
            if not os.path.exists(path):
                diags.append(f"{rid}: missing file {rec['path']}")
            elif check_hashes and sha256_file(path) != rec.get("sha256"):
                diags.append(f"{rid}: content hash mismatch for {rec['path']}")
        else:
            frames = rec.get("frame_sha256", [])
            if len(frames) != rec.get("n_frames"):
                diags.append(f"{rid}: frame hash count != n_frames")
            for j, want in enumerate(frames):
                path = os.path.join(root, rec["path"], f"frame_{j:02d}.png")
                if not os.path.exists(path):
                    diags.append(f"{rid}: missing frame {j}")
                elif check_hashes and sha256_file(path) != want:
                    diags.append(f"{rid}: content hash mismatch for frame {j}")
    return diags
