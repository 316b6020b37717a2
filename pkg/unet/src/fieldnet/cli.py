"""Command surface: ``fieldnet train`` and ``fieldnet reconstruct``."""

import argparse
import json
import sys

from .model import ModelConfig
from .reconstruct import reconstruct
from .train import TrainConfig, train


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fieldnet",
        description="Masked sound field reconstruction with a partial-"
                    "convolution U-Net")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="train on a tensor dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--variant", choices=["magnitude", "complex"],
                   default="complex")
    p.add_argument("--config", help="JSON overrides for model/training")
    p.add_argument("--resume", action="store_true")

    p = subs.add_parser("reconstruct", help="reconstruct a masked tensor")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    try:
        if args.command == "train":
            overrides = {}
            if args.config:
                with open(args.config) as fh:
                    overrides = json.load(fh)
            model_cfg = ModelConfig(variant=args.variant,
                                    **overrides.get("model", {}))
            train_cfg = TrainConfig(**{k: tuple(v) if isinstance(v, list)
                                       else v
                                       for k, v in
                                       overrides.get("train", {}).items()})
            train(args.data, args.out, model_cfg, train_cfg,
                  resume=args.resume)
        else:
            flagged = reconstruct(args.ckpt, args.in_path, args.out)
            if flagged.any():
                print(f"warning: {int(flagged.sum())} frequencies lacked "
                      "observations for rescaling", file=sys.stderr)
        return 0
    except (FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
