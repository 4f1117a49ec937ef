#!/usr/bin/env python3
"""Print the cost table for both shipped variants: parameters, serialized
size, and GFLOPs for the full vs preset inference paths at a few
resolutions.
"""

import argparse
import os
import tempfile

from tfp.formats import save_weights
from tfp.net import build, count_flops, count_params, default_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", nargs="*", type=int, default=[256, 512, 1024])
    args = ap.parse_args()

    print(f"{'variant':8s} {'params':>8s} {'file KB':>8s}", end="")
    for r in args.resolutions:
        print(f" {f'full G@{r}':>12s} {f'preset G@{r}':>12s}", end="")
    print()
    for variant in ("TFP", "TFP-L"):
        spec = default_spec(variant)
        net = build(spec, seed=0)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "w.tfpw")
            save_weights(net, path)
            kb = os.path.getsize(path) / 1024
        print(f"{variant:8s} {count_params(spec):8d} {kb:8.1f}", end="")
        for r in args.resolutions:
            full = count_flops(spec, r, r, "full").total_flops / 1e9
            preset = count_flops(spec, r, r, "preset").total_flops / 1e9
            print(f" {full:12.4f} {preset:12.4f}", end="")
        print()


if __name__ == "__main__":
    main()
