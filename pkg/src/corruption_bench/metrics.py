"""Robustness metrics: normalized corruption errors and perturbation
stability scores.

Corruption side: a model's top-1 error is tallied per (kind, severity) into
an ErrorTable; each kind's errors are summed over the five severities and
divided by the same sum for a baseline model, giving the Corruption Error
(CE, in percent).  The mean over the fifteen benchmark kinds is the mCE.
Relative CE subtracts each model's clean error from every severity term
first, measuring degradation beyond the clean baseline.

Perturbation side: over frame pairs of a perturbation sequence (adjacent
frames for temporal kinds, each frame versus the clean first frame for
noise kinds), the flip probability FP is the fraction of pairs whose top-1
predictions disagree, and uT5D is the mean top-5 displacement d between
the pair's ranked prediction lists.  Dividing by a baseline's FP or uT5D
gives the Flip Rate FR and the T5D (percent); their means over the ten
common perturbation kinds give mFR and mT5D.  There is deliberately no
relative variant of the mFR; none has a natural formulation.
"""

import numpy as np

from .baselines import BaselineProfile
from .corruptions import BENCHMARK_KINDS, VALIDATION_KINDS
from .errors import ParameterError, UndefinedMeasureError, ValidationError
from .perturbations import COMMON_KINDS, EXTRA_KINDS, frame_pairs

SEVERITIES = (1, 2, 3, 4, 5)


# ---------------------------------------------------------------------------
# top-5 displacement

def _rank_map(preds) -> dict:
    ranks = {}
    for r, cls in enumerate(preds, start=1):
        if cls in ranks:
            raise ValidationError(f"duplicate class {cls} in prediction list")
        ranks[cls] = r
    return ranks


def top5_distance(later, earlier) -> int:
    """Displacement of the top-5 predictions between two ranked lists.

    For each of the five highest-ranked classes of ``earlier``, its rank in
    ``later`` is looked up (any rank past the visible top five, absent
    classes included, counts as rank six: displacement stops accumulating
    once a class leaves the top five).  The result sums the absolute rank
    displacement of those five classes.  Zero iff both lists agree on the
    top five; not symmetric in its arguments, so the frame order of the
    pair matters.
    """
    a = list(later)
    b = list(earlier)
    if len(a) < 5 or len(b) < 5:
        raise ParameterError(
            f"prediction lists must have >= 5 entries, got {len(a)}, {len(b)}")
    rank_a = _rank_map(a)
    _rank_map(b)
    total = 0
    for i in range(1, 6):
        s = rank_a.get(b[i - 1], 6)
        total += abs(min(s, 6) - i)
    return total


def zipfian_distance(later, earlier) -> float:
    """Whole-ranking displacement with Zipfian rank weights.

    Both arguments must rank the same classes.  With sigma(i) the rank in
    ``later`` of the class ``earlier`` puts at rank i, the score is
    sum_i w_i * |w_i - w_sigma(i)| with w_i = 1/i, so churn at the head of
    the ranking dominates and ties deep in the tail barely register.
    """
    a = list(later)
    b = list(earlier)
    rank_a = _rank_map(a)
    _rank_map(b)
    if len(a) != len(b) or set(a) != set(b):
        raise ValidationError("rankings must cover the same classes")
    sigma = np.array([rank_a[cls] for cls in b], dtype=np.float64)
    w = 1.0 / np.arange(1, len(b) + 1, dtype=np.float64)
    return float(np.sum(w * np.abs(w - 1.0 / sigma)))


# ---------------------------------------------------------------------------
# corruption-side aggregation

class ErrorTable:
    """Top-1 error rates per (corruption kind, severity), plus clean error."""

    def __init__(self, clean_error: float, errors: dict):
        if not (0.0 <= clean_error <= 1.0):
            raise ParameterError(
                f"clean_error must be in [0, 1], got {clean_error}")
        self.clean_error = float(clean_error)
        self._errors = {}
        for kind, by_sev in errors.items():
            row = {}
            for sev, err in by_sev.items():
                if sev not in SEVERITIES:
                    raise ParameterError(
                        f"severity {sev} for {kind!r} out of range 1..5")
                if not (0.0 <= err <= 1.0):
                    raise ParameterError(
                        f"error for {kind!r} s{sev} must be in [0, 1], got {err}")
                row[int(sev)] = float(err)
            missing = [s for s in SEVERITIES if s not in row]
            if missing:
                raise ParameterError(
                    f"{kind!r} is missing severities {missing}")
            self._errors[kind] = row

    def kinds(self) -> list:
        return sorted(self._errors)

    def has_kind(self, kind: str) -> bool:
        return kind in self._errors

    def error(self, kind: str, severity: int) -> float:
        try:
            return self._errors[kind][severity]
        except KeyError:
            raise ParameterError(f"no error recorded for {kind!r} s{severity}")

    def sum_errors(self, kind: str) -> float:
        if kind not in self._errors:
            raise ParameterError(f"no errors recorded for kind {kind!r}")
        return sum(self._errors[kind][s] for s in SEVERITIES)

    def mean_error(self, kind: str) -> float:
        return self.sum_errors(kind) / len(SEVERITIES)

    def to_dict(self) -> dict:
        return {
            "clean_error": self.clean_error,
            "errors": {k: {str(s): self._errors[k][s] for s in SEVERITIES}
                       for k in sorted(self._errors)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorTable":
        errors = {k: {int(s): v for s, v in row.items()}
                  for k, row in d["errors"].items()}
        return cls(d["clean_error"], errors)


def corruption_error(table: ErrorTable, kind: str,
                     baseline: BaselineProfile) -> float:
    """CE in percent: the model's summed severity errors over the baseline's."""
    return 100.0 * table.sum_errors(kind) / baseline.ce_denominator(kind)


def relative_corruption_error(table: ErrorTable, kind: str,
                              baseline: BaselineProfile) -> float:
    """Relative CE in percent: clean error is subtracted from each severity
    term of both model and baseline before normalizing."""
    denom = baseline.relative_ce_denominator(kind)
    if denom <= 0:
        raise UndefinedMeasureError(
            f"baseline {baseline.name!r} has no excess error for {kind!r}; "
            "relative CE is undefined")
    num = table.sum_errors(kind) - 5.0 * table.clean_error
    return 100.0 * num / denom


def mce(table: ErrorTable, baseline: BaselineProfile) -> float:
    """Mean CE over the fifteen benchmark kinds, all of which must be
    present."""
    missing = [k for k in BENCHMARK_KINDS if not table.has_kind(k)]
    if missing:
        raise UndefinedMeasureError(
            f"mCE needs all benchmark kinds; missing {missing}")
    return float(np.mean([corruption_error(table, k, baseline)
                          for k in BENCHMARK_KINDS]))


def relative_mce(table: ErrorTable, baseline: BaselineProfile) -> float:
    missing = [k for k in BENCHMARK_KINDS if not table.has_kind(k)]
    if missing:
        raise UndefinedMeasureError(
            f"relative mCE needs all benchmark kinds; missing {missing}")
    return float(np.mean([relative_corruption_error(table, k, baseline)
                          for k in BENCHMARK_KINDS]))


# ---------------------------------------------------------------------------
# perturbation-side aggregation

def flip_probability(sequences, mode: str, stride: int = 1) -> float:
    """Fraction of compared frame pairs whose top-1 predictions differ.

    ``sequences`` is an iterable of per-frame top-1 predictions, one entry
    per sequence.  Temporal sequences compare frames ``stride`` apart;
    noise sequences compare against the first (clean) frame.
    """
    flips = 0
    total = 0
    for seq in sequences:
        seq = list(seq)
        for a, b in frame_pairs(len(seq), mode, stride):
            flips += int(seq[a] != seq[b])
            total += 1
    if total == 0:
        raise ParameterError("no frame pairs to compare")
    return flips / total


def unstandardized_t5d(sequences, mode: str, stride: int = 1) -> float:
    """Mean top-5 displacement over compared frame pairs.

    ``sequences`` holds per-frame ranked prediction lists (>= 5 classes).
    The later frame of each pair is the first argument of the displacement,
    matching its definition.
    """
    total = 0.0
    count = 0
    for seq in sequences:
        seq = list(seq)
        for a, b in frame_pairs(len(seq), mode, stride):
            total += top5_distance(seq[b], seq[a])
            count += 1
    if count == 0:
        raise ParameterError("no frame pairs to compare")
    return total / count


def flip_rate(fp: float, kind: str, baseline: BaselineProfile) -> float:
    """FR in percent: flip probability over the baseline's."""
    return 100.0 * fp / baseline.fp_denominator(kind)


def t5d(ut5d_value: float, kind: str, baseline: BaselineProfile) -> float:
    """T5D in percent: mean top-5 displacement over the baseline's."""
    return 100.0 * ut5d_value / baseline.t5d_denominator(kind)


def mean_flip_rate(fps: dict, baseline: BaselineProfile) -> float:
    """mFR in percent over the ten common perturbation kinds."""
    missing = [k for k in COMMON_KINDS if k not in fps]
    if missing:
        raise UndefinedMeasureError(
            f"mFR needs all common perturbation kinds; missing {missing}")
    return float(np.mean([flip_rate(fps[k], k, baseline)
                          for k in COMMON_KINDS]))


def mean_t5d(ut5ds: dict, baseline: BaselineProfile) -> float:
    """mT5D in percent over the ten common perturbation kinds."""
    missing = [k for k in COMMON_KINDS if k not in ut5ds]
    if missing:
        raise UndefinedMeasureError(
            f"mT5D needs all common perturbation kinds; missing {missing}")
    return float(np.mean([t5d(ut5ds[k], k, baseline)
                          for k in COMMON_KINDS]))


# ---------------------------------------------------------------------------
# assembled report

class RobustnessReport:
    """Everything the evaluation produces, ready for rendering.

    Summary statistics that need kinds not present in the input (mCE wants
    all fifteen benchmark kinds, mFR/mT5D the ten common perturbations)
    are left as None rather than silently averaging a subset.
    """

    def __init__(self, baseline_name: str, clean_error=None, table=None,
                 ce=None, rel_ce=None, mce_value=None, rel_mce_value=None,
                 fp=None, fr=None, ut5d=None, t5d_values=None,
                 mfr_value=None, mt5d_value=None, stride: int = 1,
                 baseline_sha256=None, manifest_sha256=None):
        self.baseline_name = baseline_name
        self.clean_error = clean_error
        self.table = table
        self.ce = dict(ce or {})
        self.rel_ce = dict(rel_ce or {})
        self.mce = mce_value
        self.rel_mce = rel_mce_value
        self.fp = dict(fp or {})
        self.fr = dict(fr or {})
        self.ut5d = dict(ut5d or {})
        self.t5d = dict(t5d_values or {})
        self.mfr = mfr_value
        self.mt5d = mt5d_value
        self.stride = stride
        self.baseline_sha256 = baseline_sha256
        self.manifest_sha256 = manifest_sha256

    @classmethod
    def from_corruption_results(cls, table: ErrorTable,
                                baseline: BaselineProfile,
                                manifest_sha256=None) -> "RobustnessReport":
        ce = {}
        rel = {}
        for kind in table.kinds():
            ce[kind] = corruption_error(table, kind, baseline)
            try:
                rel[kind] = relative_corruption_error(table, kind, baseline)
            except UndefinedMeasureError:
                pass
        have_all = all(table.has_kind(k) for k in BENCHMARK_KINDS)
        return cls(
            baseline.name, clean_error=table.clean_error, table=table,
            ce=ce, rel_ce=rel,
            mce_value=mce(table, baseline) if have_all else None,
            rel_mce_value=relative_mce(table, baseline) if have_all else None,
            baseline_sha256=baseline.digest(),
            manifest_sha256=manifest_sha256,
        )

    @classmethod
    def from_perturbation_results(cls, fps: dict, ut5ds: dict,
                                  baseline: BaselineProfile,
                                  stride: int = 1,
                                  manifest_sha256=None) -> "RobustnessReport":
        fr = {k: flip_rate(v, k, baseline) for k, v in fps.items()}
        t5 = {k: t5d(v, k, baseline) for k, v in ut5ds.items()}
        have_all = all(k in fps for k in COMMON_KINDS)
        return cls(
            baseline.name, fp=dict(fps), fr=fr, ut5d=dict(ut5ds),
            t5d_values=t5,
            mfr_value=mean_flip_rate(fps, baseline) if have_all else None,
            mt5d_value=mean_t5d(ut5ds, baseline) if have_all else None,
            stride=stride,
            baseline_sha256=baseline.digest(),
            manifest_sha256=manifest_sha256,
        )

    def merged_with(self, other: "RobustnessReport") -> "RobustnessReport":
        if other.baseline_name != self.baseline_name:
            raise ParameterError("cannot merge reports with different baselines")
        out = RobustnessReport(self.baseline_name)
        for name in ("clean_error", "table", "mce", "rel_mce", "mfr", "mt5d",
                     "stride", "baseline_sha256", "manifest_sha256"):
            setattr(out, name, getattr(other, name, None)
                    if getattr(other, name, None) is not None
                    else getattr(self, name, None))
        for name in ("ce", "rel_ce", "fp", "fr", "ut5d", "t5d"):
            merged = dict(getattr(self, name))
            merged.update(getattr(other, name))
            setattr(out, name, merged)
        return out

    def to_dict(self) -> dict:
        d = {"baseline": self.baseline_name}
        if self.baseline_sha256 is not None:
            d["baseline_sha256"] = self.baseline_sha256
        if self.manifest_sha256 is not None:
            d["manifest_sha256"] = self.manifest_sha256
        if self.clean_error is not None:
            d["clean_error"] = self.clean_error
        if self.table is not None:
            d["error_table"] = self.table.to_dict()
        if self.ce:
            d["ce"] = dict(sorted(self.ce.items()))
            d["mce"] = self.mce
        if self.rel_ce:
            d["relative_ce"] = dict(sorted(self.rel_ce.items()))
            d["relative_mce"] = self.rel_mce
        if self.fp:
            d["fp"] = dict(sorted(self.fp.items()))
            d["fr"] = dict(sorted(self.fr.items()))
            d["ut5d"] = dict(sorted(self.ut5d.items()))
            d["t5d"] = dict(sorted(self.t5d.items()))
            d["mfr"] = self.mfr
            d["mt5d"] = self.mt5d
            d["stride"] = self.stride
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RobustnessReport":
        table = None
        if "error_table" in d:
            table = ErrorTable.from_dict(d["error_table"])
        return cls(
            d.get("baseline", "unknown"),
            clean_error=d.get("clean_error"), table=table,
            ce=d.get("ce"), rel_ce=d.get("relative_ce"),
            mce_value=d.get("mce"), rel_mce_value=d.get("relative_mce"),
            fp=d.get("fp"), fr=d.get("fr"), ut5d=d.get("ut5d"),
            t5d_values=d.get("t5d"), mfr_value=d.get("mfr"),
            mt5d_value=d.get("mt5d"), stride=d.get("stride", 1),
            baseline_sha256=d.get("baseline_sha256"),
            manifest_sha256=d.get("manifest_sha256"),
        )


BENCHMARK_CORRUPTIONS = BENCHMARK_KINDS
VALIDATION_CORRUPTIONS = VALIDATION_KINDS
COMMON_PERTURBATIONS = COMMON_KINDS
EXTRA_PERTURBATIONS = EXTRA_KINDS
