"""Command-line entry point: ``sled segment | batch | eval | synth``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline, synth
from .config import MODES, PipelineConfig, load_config
from .errors import SledError
from .preprocess import load_image

log = logging.getLogger("sled")


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg.with_overrides(mode=getattr(args, "mode", None), seed=args.seed)


def cmd_segment(args) -> int:
    cfg = _config(args)
    raw = load_image(args.image)
    result = pipeline.segment_image(raw, cfg)
    paths = pipeline.write_outputs(result, raw, args.out, Path(args.image).stem)
    for w in result.warnings:
        log.warning("%s: %s", args.image, w)
    print(paths["mask"])
    return 0


def cmd_batch(args) -> int:
    cfg = _config(args)
    rows, mean = pipeline.run_batch(args.in_dir, args.gt, args.out, cfg, jobs=args.jobs)
    failed = sum(1 for _, r in rows if isinstance(r, str) and r.startswith("error"))
    print(f"{len(rows)} image(s), {failed} failed")
    if mean is not None:
        print("mean " + " ".join(f"{k}={v:.4f}" for k, v in zip("ac se sp di ja".split(), mean.as_tuple())))
    return 0


def cmd_eval(args) -> int:
    rows, mean = pipeline.evaluate_dirs(args.pred_dir, args.gt_dir, args.out)
    if mean is None:
        log.warning("no prediction could be scored")
    else:
        print("mean " + " ".join(f"{k}={v:.4f}" for k, v in zip("ac se sp di ja".split(), mean.as_tuple())))
    return 0


def cmd_synth(args) -> int:
    pairs = synth.write_corpus(args.out, args.n, args.seed, width=args.width, height=args.height,
                               max_hairs=args.hairs)
    print(f"wrote {len(pairs)} image/mask pair(s) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sled", description="Unsupervised skin-lesion segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one image")
    p.add_argument("image")
    p.add_argument("--config")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("batch", help="segment a directory and optionally score it")
    p.add_argument("in_dir")
    p.add_argument("--gt")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="score existing masks against ground truth")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--out", required=True, help="report CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=synth.DEFAULT_SIZE[0])
    p.add_argument("--height", type=int, default=synth.DEFAULT_SIZE[1])
    p.add_argument("--hairs", type=int, default=0, help="maximum hair strokes per image")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SledError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
