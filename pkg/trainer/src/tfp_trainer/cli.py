"""Train a texture-transfer network on a content directory plus one style
image, then export engine-loadable weights, a preset, and a parity fixture.

    tfp-train --content-dir photos/ --style style.png --out run1/ \
              --steps 2000 --style-id swirl
"""

from __future__ import annotations

import argparse
import sys

from .config import LossWeights, TrainConfig
from .export import export_artifacts
from .loop import train


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="tfp-train", description=__doc__.split("\n")[0])
    ap.add_argument("--content-dir", required=True)
    ap.add_argument("--style", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--style-id", default="style")
    ap.add_argument("--variant", choices=["TFP", "TFP-L"], default="TFP")
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--batch-size", type=int, default=4)
    ap.add_argument("--lr", type=float, default=0.001)
    ap.add_argument("--crop", type=int, default=256)
    ap.add_argument("--content-resize", type=int, default=512)
    ap.add_argument("--noise-size", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--lambda-s", type=float, default=1.0)
    ap.add_argument("--lambda-d", type=float, default=1.0)
    ap.add_argument("--export-seed", type=int, default=None,
                    help="seed for the exported preset noise (default: --seed)")
    ap.add_argument("--no-pretrained-vgg", action="store_true",
                    help="use a fixed-seed random feature network instead of "
                         "downloading VGG-16 weights")
    args = ap.parse_args(argv)

    cfg = TrainConfig(
        content_dir=args.content_dir,
        style_image=args.style,
        out_dir=args.out,
        steps=args.steps,
        batch_size=args.batch_size,
        lr=args.lr,
        content_resize=args.content_resize,
        crop=args.crop,
        noise_size=args.noise_size,
        seed=args.seed,
        variant=args.variant,
        lambda_s=args.lambda_s,
        lambda_d=args.lambda_d,
    )
    try:
        result = train(cfg, LossWeights(), pretrained_vgg=not args.no_pretrained_vgg)
        export_seed = args.export_seed if args.export_seed is not None else args.seed
        paths = export_artifacts(
            result.net, args.out, args.style_id, export_seed,
            args.lambda_s, args.lambda_d, noise_size=args.noise_size,
        )
    except (FileNotFoundError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"weights: {paths['weights']}")
    print(f"preset:  {paths['preset']}")
    print(f"fixture: {paths['fixture']}")
    if not result.extractor.pretrained:
        print("note: perceptual network used fixed-seed random features")
    return 0


if __name__ == "__main__":
    sys.exit(main())
