"""Command line: predict a generated tree into a JSONL log the harness
can validate and score."""

import argparse
import sys

from .errors import ConfigError
from .inference import run_inference
from .models import ModelRef

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_IO = 2
EXIT_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="infer-adapter",
        description="batch image classifier inference over a benchmark tree")
    p.add_argument("tree", help="generated tree root (contains manifest.json)")
    p.add_argument("out", help="prediction log to write (JSONL)")
    p.add_argument("--model", default="toy",
                   help="builtin (toy, constant) or module:function")
    p.add_argument("--topk", type=int, default=10,
                   help="ranks to record per prediction (>= 6)")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--ten-crop", action="store_true",
                   help="average softmax over four corners + center, mirrored")
    p.add_argument("--resize", type=int,
                   help="resize short side before cropping")
    p.add_argument("--crop", type=int, help="center crop size")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = ModelRef(args.model, topk=args.topk, resize=args.resize,
                         crop=args.crop)
        written, errors = run_inference(model, args.tree, args.out,
                                        batch=args.batch,
                                        ten_crop=args.ten_crop)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for err in errors:
        print(f"warning: {err['id']} frame {err['frame']}: {err['error']}",
              file=sys.stderr)
    print(f"wrote {written} predictions to {args.out}")
    if errors:
        print(f"{len(errors)} unit(s) failed to decode", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
