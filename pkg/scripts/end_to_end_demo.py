#!/usr/bin/env python3
"""Build a fresh network, capture a preset, and produce every artifact the
engine knows how to make (texture PNGs, a stylized image, a bench report)
under ./demo_out. Everything is seeded, so reruns reproduce byte-identical
outputs.
"""

import argparse
import pathlib
import sys

import numpy as np

from tfp import cli, images
from tfp.noise import sample_noise


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="demo_out")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--size", default="256x256")
    args = ap.parse_args()

    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    weights = out / "tfp.tfpw"
    preset = out / "style.tfpp"
    content = out / "content.png"

    steps = [
        ["init", "--variant", "TFP", "--seed", str(args.seed), "--out", str(weights)],
        ["preset", "gen", "--weights", str(weights), "--seed", str(args.seed + 1),
         "--size", args.size, "--style-id", "demo", "--out", str(preset)],
    ]
    for argv in steps:
        if cli.main(argv) != 0:
            return 1

    # Synthetic content: smooth blobs so the texture injection is visible.
    h, w = (int(v) for v in args.size.split("x"))
    yy, xx = np.meshgrid(np.linspace(-1, 1, h), np.linspace(-1, 1, w), indexing="ij")
    r = np.sqrt(yy**2 + xx**2)
    img = np.stack([0.5 + 0.4 * np.cos(3 * r), 0.5 + 0.4 * yy, 0.5 + 0.4 * xx])
    img = np.clip(img[None].astype(np.float32), 0, 1)
    images.save_image(img, str(content))

    steps = [
        ["stylize", "--weights", str(weights), "--preset", str(preset),
         "--content", str(content), "--out", str(out / "stylized.png")],
        ["texture", "--weights", str(weights), "--seed", str(args.seed + 2),
         "--size", args.size, "--out", str(out / "texture_a.png")],
        ["texture", "--weights", str(weights), "--seed", str(args.seed + 3),
         "--size", args.size, "--out", str(out / "texture_b.png")],
        ["bench", "--weights", str(weights), "--preset", str(preset),
         "--size", args.size, "--reps", "20", "--seed", str(args.seed),
         "--report", str(out / "bench.txt")],
    ]
    for argv in steps:
        if cli.main(argv) != 0:
            return 1
    print(f"artifacts in {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
