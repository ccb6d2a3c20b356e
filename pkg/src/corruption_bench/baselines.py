"""Baseline profiles: the reference-model constants that turn raw error and
flip statistics into comparable normalized scores.

A profile stores, for a single reference model, its clean top-1 error, its
mean corruption error per kind (mean over the five severities), its flip
probability per perturbation kind, and its mean top-5 displacement per
perturbation kind.  Two profiles ship with the package:

* ``alexnet-paper``: the published reference constants used for the
  standard normalized scores.
* ``unit``: all denominators 1 (and clean error 0), so normalized scores
  reduce to the raw statistics.
"""

import configparser
import hashlib
import importlib.resources
import os

from .errors import ParameterError, ValidationError

PACKAGED_PROFILES = ("alexnet-paper", "unit")


class BaselineProfile:
    def __init__(self, name: str, clean_error: float, ce: dict, fp: dict,
                 t5d: dict):
        if not (0.0 <= clean_error <= 1.0):
            raise ValidationError(
                f"clean_error must be in [0, 1], got {clean_error}")
        for label, table in (("corruption_denoms", ce),
                             ("fp_denoms", fp),
                             ("ut5d_denoms", t5d)):
            for kind, val in table.items():
                if val <= 0:
                    raise ValidationError(
                        f"baseline {label}[{kind}] must be > 0, got {val}")
        self.name = name
        self.clean_error = float(clean_error)
        self._ce = dict(ce)
        self._fp = dict(fp)
        self._t5d = dict(t5d)

    # mean error per severity is stored; the normalizing denominator is the
    # sum over the five severities
    def ce_denominator(self, kind: str) -> float:
        if kind not in self._ce:
            raise ParameterError(
                f"baseline {self.name!r} has no corruption error for {kind!r}")
        return 5.0 * self._ce[kind]

    def relative_ce_denominator(self, kind: str) -> float:
        return self.ce_denominator(kind) - 5.0 * self.clean_error

    def fp_denominator(self, kind: str) -> float:
        if kind not in self._fp:
            raise ParameterError(
                f"baseline {self.name!r} has no flip probability for {kind!r}")
        return self._fp[kind]

    def t5d_denominator(self, kind: str) -> float:
        if kind not in self._t5d:
            raise ParameterError(
                f"baseline {self.name!r} has no top-5 distance for {kind!r}")
        return self._t5d[kind]

    def corruption_kinds(self) -> list:
        return sorted(self._ce)

    def perturbation_kinds(self) -> list:
        return sorted(self._fp)

    def canonical(self) -> str:
        lines = [f"name={self.name}", f"clean_error={self.clean_error!r}"]
        for label, table in (("corruption_denoms", self._ce),
                             ("fp_denoms", self._fp),
                             ("ut5d_denoms", self._t5d)):
            for kind in sorted(table):
                lines.append(f"{label}.{kind}={table[kind]!r}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    @classmethod
    def from_string(cls, text: str, name: str = None) -> "BaselineProfile":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"malformed profile: {exc}") from exc
        if "profile" not in cp:
            raise ValidationError("profile missing [profile] section")
        head = cp["profile"]
        pname = name or head.get("name", "unnamed")
        try:
            clean = float(head["clean_error"])
        except KeyError:
            raise ValidationError("profile missing clean_error")
        except ValueError:
            raise ValidationError("profile clean_error is not numeric")

        def section(label):
            if label not in cp:
                raise ValidationError(f"profile missing [{label}] section")
            out = {}
            for kind, raw in cp.items(label):
                try:
                    out[kind] = float(raw)
                except ValueError:
                    raise ValidationError(
                        f"profile [{label}] {kind}: {raw!r} is not numeric")
            return out

        return cls(pname, clean, section("corruption_denoms"),
                   section("fp_denoms"), section("ut5d_denoms"))

    @classmethod
    def from_file(cls, path) -> "BaselineProfile":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_string(fh.read())

    @classmethod
    def packaged(cls, name: str) -> "BaselineProfile":
        if name not in PACKAGED_PROFILES:
            raise ParameterError(
                f"unknown baseline {name!r}; packaged: {PACKAGED_PROFILES}")
        text = importlib.resources.files("corruption_bench.data") \
            .joinpath(f"{name}.profile").read_text(encoding="utf-8")
        return cls.from_string(text)

    @classmethod
    def from_results(cls, name: str, clean_error: float, mean_errors: dict,
                     fps: dict, t5ds: dict) -> "BaselineProfile":
        """Wrap a model's own measured statistics as a profile, so a model
        normalized against itself scores exactly 100."""
        return cls(name, clean_error, mean_errors, fps, t5ds)


def resolve_baseline(spec: str) -> BaselineProfile:
    """Accept either a packaged profile name or a path to a profile file."""
    if spec in PACKAGED_PROFILES:
        return BaselineProfile.packaged(spec)
    if os.path.exists(spec):
        return BaselineProfile.from_file(spec)
    raise ParameterError(
        f"baseline {spec!r} is neither a packaged profile name "
        f"({', '.join(PACKAGED_PROFILES)}) nor an existing file")
