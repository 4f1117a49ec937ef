#!/usr/bin/env python3
"""Side-by-side ablation of the semantic-texture-fusion term: train twice
(with the term and without), stylize the same probe content with each
result, and write the outputs next to each other for visual inspection.
Without the term, the texture layer tends to mask the content semantics
in the fused output; this is a qualitative artifact, not an automated
assertion.

    python scripts/stf_ablation.py --content-dir photos/ --style style.png \
        --out ablation_out/ --steps 400
"""

import argparse
import dataclasses
import pathlib
import sys

import torch

from tfp_trainer import LossWeights, TrainConfig, train
from tfp_trainer.data import load_image_tensor
from tfp_trainer.export import save_png
from tfp_trainer.noise import sample_noise


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--content-dir", required=True)
    ap.add_argument("--style", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--crop", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-pretrained-vgg", action="store_true")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_cfg = TrainConfig(
        content_dir=args.content_dir,
        style_image=args.style,
        out_dir=str(out / "runs"),
        steps=args.steps,
        batch_size=2,
        crop=args.crop,
        content_resize=max(args.crop, 2 * args.crop),
        noise_size=args.crop,
        seed=args.seed,
    )
    variants = {
        "with_stf": LossWeights(),
        "without_stf": dataclasses.replace(LossWeights(), semantic_texture_fusion=0.0),
    }

    probe = None
    for name, weights in variants.items():
        cfg = dataclasses.replace(base_cfg, out_dir=str(out / "runs" / name))
        print(f"== training {name} ==")
        result = train(cfg, weights, pretrained_vgg=not args.no_pretrained_vgg)
        net = result.net.eval()
        if probe is None:
            from tfp_trainer.data import ContentDataset

            ds = ContentDataset(args.content_dir, base_cfg.content_resize, args.crop)
            probe = ds.sample_batch(1, torch.Generator().manual_seed(args.seed))
            save_png(probe, str(out / "probe_content.png"))
        with torch.no_grad():
            f_s = net.enc_s(probe)
            f_n = net.enc_d(sample_noise(args.seed + 1, args.crop, args.crop))
            fused = net.dec_f(base_cfg.lambda_s * net.gate(f_s) + base_cfg.lambda_d * f_n)
            texture_only = net.dec_f(base_cfg.lambda_d * f_n)
        save_png(fused, str(out / f"{name}_fused.png"))
        save_png(texture_only, str(out / f"{name}_texture_only.png"))
    print(f"inspect {out}/: the *_fused images show whether content survives "
          f"texture injection")
    return 0


if __name__ == "__main__":
    sys.exit(main())
