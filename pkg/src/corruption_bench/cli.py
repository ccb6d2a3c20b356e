"""Command-line interface.

Subcommands: gen-c, gen-p, validate, eval, report, profiles.

Exit codes: 0 success, 1 validation failure (bad content, incomplete
coverage), 2 I/O failure (missing or unreadable files), 3 parameter error
(bad flags or values).
"""

import argparse
import os
import sys

from . import __version__
from .baselines import PACKAGED_PROFILES, resolve_baseline
from .corruptions import ALL_KINDS
from .errors import (FormatError, ParameterError, UndefinedMeasureError,
                     ValidationError)
from .evaluate import evaluate_run, read_labels, read_prediction_log
from .generate import generate_corruptions, generate_perturbations
from .manifest import Manifest, validate_tree
from .metrics import RobustnessReport
from .perturbations import PERTURBATION_KINDS
from .report import FORMATS, plot_report, render
from .schedules import load_schedule

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_PARAMETER = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad arguments; bad arguments are parameter errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARAMETER)


def _split_kinds(text, known, what):
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    if not kinds:
        raise ParameterError(f"--kinds lists no {what} kinds")
    for k in kinds:
        if k not in known:
            raise ParameterError(f"unknown {what} kind {k!r}")
    return kinds


def _split_severities(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(int(part))
        except ValueError:
            raise ParameterError(f"severity {part!r} is not an integer")
    if not out:
        raise ParameterError("--severities lists no severities")
    return out


def _emit(text, out_path):
    if out_path and out_path != "-":
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_gen_c(args):
    kinds = None
    if args.kinds:
        kinds = _split_kinds(args.kinds, ALL_KINDS, "corruption")
    severities = _split_severities(args.severities) if args.severities else None
    schedule = load_schedule(args.schedule)
    man = generate_corruptions(
        args.source, args.out, seed=args.seed, kinds=kinds,
        severities=severities, schedule=schedule, format=args.format,
        quality=args.quality, jobs=args.jobs,
        log=(lambda msg: print(msg, file=sys.stderr)) if args.verbose else None)
    print(f"wrote {len(man.records)} images under {args.out} "
          f"(manifest digest {man.digest()[:16]})")
    return EXIT_OK


def _cmd_gen_p(args):
    kinds = None
    if args.kinds:
        kinds = _split_kinds(args.kinds, PERTURBATION_KINDS, "perturbation")
    schedule = load_schedule(args.schedule)
    man = generate_perturbations(
        args.source, args.out, seed=args.seed, kinds=kinds,
        n_frames=args.frames, difficulty=args.difficulty, schedule=schedule,
        format=args.format, jobs=args.jobs,
        log=(lambda msg: print(msg, file=sys.stderr)) if args.verbose else None)
    n_frames = sum(len(r["frame_sha256"]) for r in man.records)
    print(f"wrote {len(man.records)} sequences ({n_frames} frames) under "
          f"{args.out} (manifest digest {man.digest()[:16]})")
    return EXIT_OK


def _cmd_validate(args):
    from .evaluate import validate_predictions
    diags = validate_tree(args.tree, check_hashes=not args.skip_hashes)
    if args.log:
        try:
            man = Manifest.read(args.tree)
            _, entries = read_prediction_log(args.log)
            labels = read_labels(args.labels) if args.labels else None
            diags.extend(validate_predictions(entries, man, labels))
        except (FormatError, ValidationError) as exc:
            diags.append(str(exc))
    for d in diags:
        print(d)
    if diags:
        print(f"{len(diags)} problem(s) found")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def _cmd_eval(args):
    if args.stride != 1 and os.path.isdir(args.tree):
        man = Manifest.read(args.tree)
        if man.tree_kind == "corruption":
            raise ParameterError("--stride applies to perturbation trees only")
    baseline = resolve_baseline(args.baseline)
    rep = evaluate_run(args.tree, args.log, baseline,
                       labels_path=args.labels, stride=args.stride)
    _emit(render(rep, args.format), args.out)
    return EXIT_OK


def _cmd_report(args):
    import json
    with open(args.scores, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.scores}: not valid JSON ({exc})")
    rep = RobustnessReport.from_dict(d)
    _emit(render(rep, args.format), args.out)
    if args.plot:
        plot_report(rep, args.plot)
        print(f"plot written to {args.plot}", file=sys.stderr)
    return EXIT_OK


def _cmd_profiles(args):
    if args.action == "list":
        for name in PACKAGED_PROFILES:
            prof = resolve_baseline(name)
            print(f"{name}: clean error {100 * prof.clean_error:.1f}%, "
                  f"{len(prof.corruption_kinds())} corruption kinds, "
                  f"{len(prof.perturbation_kinds())} perturbation kinds")
        return EXIT_OK
    raise ParameterError(f"unknown profiles action {args.action!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="corruption-bench",
                description="deterministic robustness benchmark toolkit")
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("gen-c", help="generate a corrupted image tree")
    c.add_argument("source", help="directory of source images")
    c.add_argument("out", help="output tree root")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--kinds", help="comma-separated corruption kinds")
    c.add_argument("--severities", help="comma-separated severities (1..5)")
    c.add_argument("--format", choices=["jpeg", "png"], default="jpeg")
    c.add_argument("--quality", type=int, default=85,
                   help="jpeg quality (default 85)")
    c.add_argument("--schedule", help="severity schedule INI path")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--verbose", action="store_true")
    c.set_defaults(func=_cmd_gen_c)

    pp = sub.add_parser("gen-p", help="generate perturbation sequences")
    pp.add_argument("source", help="directory of source images")
    pp.add_argument("out", help="output tree root")
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--kinds", help="comma-separated perturbation kinds")
    pp.add_argument("--frames", type=int, default=31)
    pp.add_argument("--difficulty", choices=["normal", "hard"],
                    default="normal")
    pp.add_argument("--schedule", help="schedule INI path (step overrides)")
    pp.add_argument("--format", choices=["png"], default="png")
    pp.add_argument("--jobs", type=int, default=1)
    pp.add_argument("--verbose", action="store_true")
    pp.set_defaults(func=_cmd_gen_p)

    v = sub.add_parser("validate",
                       help="check a tree, and optionally a log, for problems")
    v.add_argument("tree", help="generated tree root")
    v.add_argument("--log", help="prediction log to check against the tree")
    v.add_argument("--labels", help="labels.tsv to check coverage against")
    v.add_argument("--skip-hashes", action="store_true",
                   help="skip content hash verification")
    v.set_defaults(func=_cmd_validate)

    e = sub.add_parser("eval", help="score a prediction log")
    e.add_argument("tree", help="generated tree root")
    e.add_argument("--log", required=True, help="prediction log (JSONL)")
    e.add_argument("--labels", help="labels.tsv (default: <tree>/labels.tsv)")
    e.add_argument("--baseline", default="alexnet-paper",
                   help="packaged profile name or profile file path")
    e.add_argument("--stride", type=int, choices=[1, 2], default=1)
    e.add_argument("--format", choices=list(FORMATS), default="text")
    e.add_argument("--out", help="write rendered scores here instead of stdout")
    e.set_defaults(func=_cmd_eval)

    r = sub.add_parser("report", help="render saved scores (eval --format json)")
    r.add_argument("scores", help="scores JSON file")
    r.add_argument("--format", choices=list(FORMATS), default="text")
    r.add_argument("--out", help="write rendered report here instead of stdout")
    r.add_argument("--plot", help="also write a bar-chart PNG here")
    r.set_defaults(func=_cmd_report)

    pr = sub.add_parser("profiles", help="inspect packaged baseline profiles")
    pr.add_argument("action", choices=["list"])
    pr.set_defaults(func=_cmd_profiles)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (ValidationError, FormatError, UndefinedMeasureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
