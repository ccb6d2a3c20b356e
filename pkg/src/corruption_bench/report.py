"""Report rendering: text tables, CSV, JSON, and summary bar charts.

The text table transposes the usual presentation: summary columns (clean
error, mCE) first, then one column per kind, grouped Noise / Blur /
Weather / Digital.  Validation kinds are shown in their own block and
never enter the means.  CSV is a long-format dump at full precision, so
json -> csv -> json round trips exactly.
"""

import csv
import io
import json

from .corruptions import BENCHMARK_KINDS, VALIDATION_KINDS
from .errors import FormatError, ParameterError
from .metrics import RobustnessReport
from .perturbations import COMMON_KINDS, EXTRA_KINDS

FORMATS = ("text", "csv", "json")

CORRUPTION_GROUPS = (
    ("Noise", ("gaussian_noise", "shot_noise", "impulse_noise")),
    ("Blur", ("defocus_blur", "glass_blur", "motion_blur", "zoom_blur")),
    ("Weather", ("snow", "frost", "fog", "brightness")),
    ("Digital", ("contrast", "elastic", "pixelate", "jpeg")),
)

VALIDATION_GROUP = ("Validation", VALIDATION_KINDS)

PERTURBATION_GROUPS = (
    ("Noise", ("gaussian_noise", "shot_noise")),
    ("Blur", ("motion_blur", "zoom_blur")),
    ("Weather", ("snow", "brightness")),
    ("Digital", ("translate", "rotate", "tilt", "scale")),
)

VALIDATION_P_GROUP = ("Validation", EXTRA_KINDS)

_SHORT = {
    "gaussian_noise": "gauss", "shot_noise": "shot",
    "impulse_noise": "impulse", "defocus_blur": "defocus",
    "glass_blur": "glass", "motion_blur": "motion", "zoom_blur": "zoom",
    "snow": "snow", "frost": "frost", "fog": "fog",
    "brightness": "bright", "contrast": "contrast", "elastic": "elastic",
    "pixelate": "pixelate", "jpeg": "jpeg", "speckle_noise": "speckle",
    "gaussian_blur": "gblur", "spatter": "spatter", "saturate": "saturate",
    "translate": "translate", "rotate": "rotate", "tilt": "tilt",
    "scale": "scale", "shear": "shear",
}

_COL = 10  # fixed column width in the text tables


def render_json(report: RobustnessReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# csv (long format, lossless)

def render_csv(report: RobustnessReport) -> str:
    """field,kind,severity,value rows carrying the complete report; float
    values are repr-formatted so parsing them back is exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "kind", "severity", "value"])

    def row(field, kind="", severity="", value=""):
        if isinstance(value, float):
            value = repr(value)
        w.writerow([field, kind, severity, value])

    row("baseline", value=report.baseline_name)
    if report.baseline_sha256 is not None:
        row("baseline_sha256", value=report.baseline_sha256)
    if report.manifest_sha256 is not None:
        row("manifest_sha256", value=report.manifest_sha256)
    if report.clean_error is not None:
        row("clean_error", value=float(report.clean_error))
    if report.table is not None:
        t = report.table.to_dict()
        row("error_clean", value=float(t["clean_error"]))
        for kind in sorted(t["errors"]):
            for sev in sorted(t["errors"][kind]):
                row("error", kind, sev, float(t["errors"][kind][sev]))
    for field, table in (("ce", report.ce), ("relative_ce", report.rel_ce),
                         ("fp", report.fp), ("fr", report.fr),
                         ("ut5d", report.ut5d), ("t5d", report.t5d)):
        for kind in sorted(table):
            row(field, kind, value=float(table[kind]))
    for field, value in (("mce", report.mce), ("relative_mce", report.rel_mce),
                         ("mfr", report.mfr), ("mt5d", report.mt5d)):
        if value is not None:
            row(field, value=float(value))
    if report.fp:
        row("stride", value=str(report.stride))
    return buf.getvalue()


def read_csv_report(text: str) -> RobustnessReport:
    """Inverse of render_csv."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["field", "kind", "severity", "value"]:
        raise FormatError("csv report missing field,kind,severity,value header")
    scalars = {}
    tables = {"ce": {}, "relative_ce": {}, "fp": {}, "fr": {},
              "ut5d": {}, "t5d": {}}
    errors = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise FormatError(f"csv report line {lineno}: expected 4 fields")
        field, kind, severity, value = row
        if field == "error":
            errors.setdefault(kind, {})[int(severity)] = float(value)
        elif field in tables:
            tables[field][kind] = float(value)
        else:
            scalars[field] = value
    d = {}
    for key in ("baseline", "baseline_sha256", "manifest_sha256"):
        if key in scalars:
            d[key] = scalars[key]
    for key in ("clean_error", "mce", "relative_mce", "mfr", "mt5d"):
        if key in scalars:
            d[key] = float(scalars[key])
    if "stride" in scalars:
        d["stride"] = int(scalars["stride"])
    for key, table in tables.items():
        if table:
            d[key] = table
    if errors:
        d["error_table"] = {
            "clean_error": float(scalars.get("error_clean", 0.0)),
            "errors": errors,
        }
    return RobustnessReport.from_dict(d)


# ---------------------------------------------------------------------------
# text tables

def _fmt(value, decimals=1):
    if value is None:
        return "-".rjust(_COL)
    return f"{value:{_COL}.{decimals}f}"


def _grouped_block(title, groups, summary_cols, rows, present):
    """One wide table: group header line, column label line, value rows.

    summary_cols: list of (label, per-row values).  rows: list of
    (row label, kind -> value or None, decimals).  present: kinds to show.
    """
    groups = [(gname, [k for k in kinds if k in present])
              for gname, kinds in groups]
    groups = [(g, ks) for g, ks in groups if ks]
    leftover = [k for k in sorted(present)
                if not any(k in ks for _, ks in groups)]
    if leftover:
        groups.append(("Other", leftover))
    label_w = max([len(r[0]) for r in rows] + [5])

    lines = [title]
    head = " " * label_w
    for label, _ in summary_cols:
        head += " " * _COL
    for gname, kinds in groups:
        head += "  " + gname.ljust(_COL * len(kinds))
    lines.append(head.rstrip())
    head = " " * label_w
    for label, _ in summary_cols:
        head += label.rjust(_COL)
    for _, kinds in groups:
        head += " " + "".join(_SHORT.get(k, k)[: _COL - 1].rjust(_COL)
                              for k in kinds) + " "
    lines.append(head.rstrip())
    for label, values, decimals in rows:
        line = label.ljust(label_w)
        for _, summary in summary_cols:
            line += _fmt(summary.get(label), decimals)
        for _, kinds in groups:
            line += " " + "".join(_fmt(values.get(k), decimals)
                                  for k in kinds) + " "
        lines.append(line.rstrip())
    return lines


def render_text(report: RobustnessReport) -> str:
    lines = [f"baseline: {report.baseline_name}"]
    if report.clean_error is not None:
        lines.append(f"clean error: {100 * report.clean_error:.2f}%")

    if report.ce:
        bench = {k for k in report.ce if k in BENCHMARK_KINDS}
        valid = {k for k in report.ce if k not in BENCHMARK_KINDS}
        if bench:
            lines.append("")
            rows = [("CE", {k: report.ce[k] for k in bench}, 1)]
            if report.rel_ce:
                rows.append(("RelCE", {k: report.rel_ce.get(k) for k in bench},
                             1))
            summary = [
                ("Error", {"CE": (100 * report.clean_error
                                  if report.clean_error is not None else None)}),
                ("mCE", {"CE": report.mce, "RelCE": report.rel_mce}),
            ]
            lines.extend(_grouped_block(
                "corruption errors (%)", CORRUPTION_GROUPS, summary, rows,
                bench))
        if valid:
            lines.append("")
            rows = [("CE", {k: report.ce[k] for k in valid}, 1)]
            if report.rel_ce:
                rows.append(("RelCE", {k: report.rel_ce.get(k) for k in valid},
                             1))
            lines.extend(_grouped_block(
                "validation corruptions (never averaged into mCE)",
                (VALIDATION_GROUP,), [], rows, valid))

    if report.fp:
        common = {k for k in report.fp if k in COMMON_KINDS}
        valid = {k for k in report.fp if k not in COMMON_KINDS}
        title = "perturbation stability"
        if report.stride != 1:
            title += f" (stride {report.stride})"
        if common:
            lines.append("")
            rows = [
                ("FP", dict(report.fp), 4),
                ("FR", dict(report.fr), 1),
                ("uT5D", dict(report.ut5d), 4),
                ("T5D", dict(report.t5d), 1),
            ]
            summary = [("mean", {"FR": report.mfr, "T5D": report.mt5d})]
            lines.extend(_grouped_block(
                title, PERTURBATION_GROUPS, summary, rows, common))
        if valid:
            lines.append("")
            rows = [
                ("FP", dict(report.fp), 4),
                ("FR", dict(report.fr), 1),
                ("uT5D", dict(report.ut5d), 4),
                ("T5D", dict(report.t5d), 1),
            ]
            lines.extend(_grouped_block(
                "validation perturbations (never averaged into mFR/mT5D)",
                (VALIDATION_P_GROUP,), [], rows, valid))

    return "\n".join(lines) + "\n"


def render(report: RobustnessReport, format: str = "text") -> str:
    if format == "text":
        return render_text(report)
    if format == "csv":
        return render_csv(report)
    if format == "json":
        return render_json(report)
    raise ParameterError(f"report format must be one of {FORMATS}")


def plot_report(report: RobustnessReport, out_path) -> None:
    """Bar chart of per-kind normalized scores (CE and/or FR)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = []
    if report.ce:
        panels.append(("Corruption Error (%)",
                       sorted(report.ce), [report.ce[k] for k in sorted(report.ce)],
                       report.mce))
    if report.fr:
        panels.append(("Flip Rate (%)",
                       sorted(report.fr), [report.fr[k] for k in sorted(report.fr)],
                       report.mfr))
    if not panels:
        raise ParameterError("report holds nothing to plot")
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(10, 4 * len(panels)), squeeze=False)
    for ax, (title, kinds, vals, mean_val) in zip(axes[:, 0], panels):
        ax.bar(range(len(kinds)), vals, color="#4878a8")
        if mean_val is not None:
            ax.axhline(mean_val, color="#a84848", linestyle="--",
                       label=f"mean {mean_val:.1f}")
            ax.legend()
        ax.set_xticks(range(len(kinds)))
        ax.set_xticklabels(kinds, rotation=45, ha="right", fontsize=8)
        ax.set_title(title)
        ax.axhline(100.0, color="gray", linewidth=0.5)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
