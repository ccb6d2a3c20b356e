"""Severity schedules: per-kind parameter ladders for severities 1..5.

A schedule is an INI file with one section per corruption kind and one key
per severity level.  Each value is a comma-separated list of name=value
parameter assignments, e.g.::

    [glass_blur]
    1 = sigma=0.7, delta=1, iterations=2

Sections named ``perturb.<kind>`` carry per-step magnitudes for the
perturbation sequences instead, one key per difficulty::

    [perturb.rotate]
    normal = deg=0.5
    hard = deg=1.0

The packaged default ships calibrated ladders; users may point --schedule
or CORRUPTION_BENCH_SCHEDULE at an edited copy.  Manifests record the
SHA-256 of the canonical serialization so downstream results are traceable
to an exact parameterization.
"""

import configparser
import hashlib
import importlib.resources
import os

from .errors import ParameterError, ValidationError

SEVERITIES = (1, 2, 3, 4, 5)

STEP_PREFIX = "perturb."

STEP_DIFFICULTIES = ("normal", "hard")

ENV_VAR = "CORRUPTION_BENCH_SCHEDULE"


def _parse_value(text: str):
    try:
        i = int(text)
        return i
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"schedule parameter value {text!r} is not numeric")


def _parse_assignments(raw: str, where: str) -> dict:
    params = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError(f"schedule {where}: bad assignment {part!r}")
        name, val = part.split("=", 1)
        params[name.strip()] = _parse_value(val.strip())
    return params


class SeveritySchedule:
    """Mapping (kind, severity) -> parameter dict for all known kinds, plus
    optional per-step magnitudes for perturbation sequences."""

    def __init__(self, table: dict, steps: dict = None):
        self._table = table
        self._steps = dict(steps or {})

    @classmethod
    def from_string(cls, text: str) -> "SeveritySchedule":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValidationError(f"malformed schedule: {exc}") from exc
        table = {}
        steps = {}
        for kind in cp.sections():
            if kind.startswith(STEP_PREFIX):
                pkind = kind[len(STEP_PREFIX):]
                by_diff = {}
                for key, raw in cp.items(kind):
                    if key not in STEP_DIFFICULTIES:
                        raise ValidationError(
                            f"schedule [{kind}]: key {key!r} is not a "
                            f"difficulty ({'/'.join(STEP_DIFFICULTIES)})")
                    by_diff[key] = _parse_assignments(raw, f"[{kind}] {key}")
                steps[pkind] = by_diff
                continue
            levels = {}
            for key, raw in cp.items(kind):
                try:
                    sev = int(key)
                except ValueError:
                    raise ValidationError(
                        f"schedule [{kind}]: key {key!r} is not a severity")
                if sev not in SEVERITIES:
                    raise ValidationError(
                        f"schedule [{kind}]: severity {sev} out of range 1..5")
                levels[sev] = _parse_assignments(raw, f"[{kind}] {sev}")
            missing = [s for s in SEVERITIES if s not in levels]
            if missing:
                raise ValidationError(
                    f"schedule [{kind}]: missing severities {missing}")
            table[kind] = levels
        if not table:
            raise ValidationError("schedule defines no corruption kinds")
        return cls(table, steps)

    @classmethod
    def from_file(cls, path) -> "SeveritySchedule":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_string(fh.read())

    @classmethod
    def default(cls) -> "SeveritySchedule":
        override = os.environ.get(ENV_VAR)
        if override:
            return cls.from_file(override)
        text = importlib.resources.files("corruption_bench.data") \
            .joinpath("default_schedule.ini").read_text(encoding="utf-8")
        return cls.from_string(text)

    def kinds(self) -> list:
        return sorted(self._table)

    def params(self, kind: str, severity: int) -> dict:
        if kind not in self._table:
            raise ParameterError(f"schedule has no kind {kind!r}")
        if severity not in SEVERITIES:
            raise ParameterError(f"severity must be in 1..5, got {severity}")
        return dict(self._table[kind][severity])

    def step_params(self, kind: str, difficulty: str) -> dict:
        """Per-step magnitudes for one perturbation kind, or {} when the
        schedule does not override them."""
        if difficulty not in STEP_DIFFICULTIES:
            raise ParameterError(
                f"difficulty must be one of {STEP_DIFFICULTIES}, "
                f"got {difficulty!r}")
        return dict(self._steps.get(kind, {}).get(difficulty, {}))

    def canonical(self) -> str:
        """Stable text form: sorted kinds, severities 1..5, sorted params,
        repr-formatted numbers."""
        lines = []
        for kind in sorted(self._table):
            lines.append(f"[{kind}]")
            for sev in SEVERITIES:
                params = self._table[kind][sev]
                body = ", ".join(f"{k}={params[k]!r}" for k in sorted(params))
                lines.append(f"{sev} = {body}")
            lines.append("")
        for kind in sorted(self._steps):
            lines.append(f"[{STEP_PREFIX}{kind}]")
            for diff in STEP_DIFFICULTIES:
                if diff in self._steps[kind]:
                    params = self._steps[kind][diff]
                    body = ", ".join(
                        f"{k}={params[k]!r}" for k in sorted(params))
                    lines.append(f"{diff} = {body}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def load_schedule(path=None) -> SeveritySchedule:
    """Resolve a schedule from an explicit path, the environment, or the
    packaged default (in that order)."""
    if path is not None:
        return SeveritySchedule.from_file(path)
    return SeveritySchedule.default()
