"""Command-line front end.

Commands:
    tfp init     --variant TFP --seed N --out W.tfpw
    tfp stylize  --weights W --preset P --content IMG --out IMG
                 [--lambda-s F --lambda-d F --out-tensor T.tfpt]
    tfp texture  --weights W --seed N --size HxW --out IMG [--lambda-d F]
    tfp preset gen --weights W --seed N --size HxW --style-id S --out P
                 [--lambda-s F --lambda-d F]
    tfp bench    --weights W --preset P --size HxW --reps N --report FILE

Every command also takes --threads (the TFP_THREADS env var overrides it).
Commands that consume randomness take --seed; when omitted a fresh seed is
generated and printed so the run stays reproducible.
"""

from __future__ import annotations

import argparse
import os
import secrets
import statistics
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import images
from .formats import FileFormatError, load_preset, load_weights, save_preset, save_tensor, save_weights
from .kernels import FusionConfig, ShapeError, set_num_threads
from .net import (
    ArchError,
    build,
    count_flops,
    count_params,
    dec_fusion,
    decode_texture,
    default_spec,
    enc_deep,
    enc_shallow,
    forward_full,
)
from .noise import sample_noise
from .preset import capture_preset, stylize_with_preset

MIN_BENCH_REPS = 20
BENCH_WARMUP = 5


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h_s, w_s = text.lower().split("x")
        h, w = int(h_s), int(w_s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 256x256, got {text!r}")
    if h <= 0 or w <= 0 or h % 4 or w % 4:
        raise argparse.ArgumentTypeError(f"size must be positive multiples of 4, got {text}")
    return h, w


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbits(32)
    print(f"seed={seed}")
    return seed


def _fusion(args, fallback: FusionConfig | None = None) -> FusionConfig | None:
    ls = getattr(args, "lambda_s", None)
    ld = getattr(args, "lambda_d", None)
    if ls is None and ld is None:
        return fallback
    base = fallback or FusionConfig(1.0, 1.0)
    return FusionConfig(
        lambda_s=base.lambda_s if ls is None else ls,
        lambda_d=base.lambda_d if ld is None else ld,
    )


def cmd_init(args) -> int:
    net = build(default_spec(args.variant), seed=_resolve_seed(args.seed))
    save_weights(net, args.out)
    print(f"wrote {args.out}: variant={net.variant} params={count_params(net)}")
    return 0


def cmd_stylize(args) -> int:
    net = load_weights(args.weights)
    preset = load_preset(args.preset)
    content = images.load_image(args.content)
    padded, (h, w) = images.pad_to_multiple(content, net.spec.downsample)
    out = stylize_with_preset(net, preset, padded, _fusion(args, preset.recommended))
    out = images.crop_to(out, h, w)
    if args.out_tensor:
        save_tensor(out, args.out_tensor)
    images.save_image(out, args.out)
    print(f"wrote {args.out} ({w}x{h}, style={preset.style_id})")
    return 0


def cmd_texture(args) -> int:
    net = load_weights(args.weights)
    seed = _resolve_seed(args.seed)
    h, w = args.size
    noise_img = sample_noise(seed, h, w)
    out = decode_texture(net, enc_deep(net, noise_img), args.lambda_d)
    images.save_image(out, args.out)
    print(f"wrote {args.out} ({w}x{h} pure texture)")
    return 0


def cmd_preset_gen(args) -> int:
    net = load_weights(args.weights)
    seed = _resolve_seed(args.seed)
    h, w = args.size
    noise_img = sample_noise(seed, h, w)
    cfg = _fusion(args, FusionConfig(1.0, 1.0))
    preset = capture_preset(net, noise_img, args.style_id, seed, recommended=cfg)
    save_preset(preset, args.out)
    fshape = "x".join(str(d) for d in preset.features.shape)
    print(f"wrote {args.out}: style={args.style_id} seed={seed} features={fshape}")
    return 0


@dataclass(frozen=True)
class BenchReport:
    variant: str
    params: int
    storage_bytes: int
    height: int
    width: int
    reps: int
    flops_full: int
    flops_preset: int
    full_ms: tuple[float, float, float]  # mean, p50, p95
    preset_ms: tuple[float, float, float]

    @property
    def speedup(self) -> float:
        return self.full_ms[1] / self.preset_ms[1]

    def as_lines(self) -> list[str]:
        f, p = self.full_ms, self.preset_ms
        return [
            f"variant={self.variant}",
            f"params={self.params}",
            f"storage_bytes={self.storage_bytes}",
            f"resolution_h={self.height}",
            f"resolution_w={self.width}",
            f"reps={self.reps}",
            f"flops_full={self.flops_full}",
            f"flops_preset={self.flops_preset}",
            f"flops_ratio={self.flops_full / self.flops_preset:.6f}",
            f"full_ms_mean={f[0]:.3f}",
            f"full_ms_p50={f[1]:.3f}",
            f"full_ms_p95={f[2]:.3f}",
            f"preset_ms_mean={p[0]:.3f}",
            f"preset_ms_p50={p[1]:.3f}",
            f"preset_ms_p95={p[2]:.3f}",
            f"speedup={self.speedup:.6f}",
        ]


def _summarize(samples: list[float]) -> tuple[float, float, float]:
    ordered = sorted(samples)
    p95 = ordered[min(len(ordered) - 1, int(round(0.95 * (len(ordered) - 1))))]
    return (statistics.fmean(ordered), statistics.median(ordered), p95)


def _time_interleaved(fn_a, fn_b, reps: int):
    """Alternate the two paths rep by rep so machine-speed drift during the
    run biases both the same way instead of skewing their ratio."""
    for _ in range(BENCH_WARMUP):
        fn_a()
        fn_b()
    a_ms, b_ms = [], []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn_a()
        a_ms.append((time.perf_counter() - t0) * 1e3)
        t0 = time.perf_counter()
        fn_b()
        b_ms.append((time.perf_counter() - t0) * 1e3)
    return _summarize(a_ms), _summarize(b_ms)


def _synthetic_content(seed: int, h: int, w: int) -> np.ndarray:
    # Smooth gradient plus mild seeded noise: content-like, deterministic.
    yy = np.linspace(0.0, 1.0, h, dtype=np.float32)[None, None, :, None]
    xx = np.linspace(0.0, 1.0, w, dtype=np.float32)[None, None, None, :]
    base = 0.5 * yy + 0.5 * xx
    img = np.repeat(base, 3, axis=1) + 0.1 * sample_noise(seed, h, w)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def run_bench(weights_path: str, preset_path: str, h: int, w: int, reps: int, seed: int) -> BenchReport:
    net = load_weights(weights_path)
    preset = load_preset(preset_path)
    if preset.features.shape[1] != net.spec.feature_channels:
        raise ShapeError(
            f"preset channels {preset.features.shape[1]} do not match "
            f"network fusion width {net.spec.feature_channels}"
        )
    content = _synthetic_content(seed, h, w)
    noise_img = sample_noise(seed, h, w)
    cfg = preset.recommended

    def full_path():
        return dec_fusion(net, enc_shallow(net, content), enc_deep(net, noise_img), cfg)

    def preset_path_fn():
        return stylize_with_preset(net, preset, content, cfg)

    full_ms, preset_ms = _time_interleaved(full_path, preset_path_fn, reps)
    return BenchReport(
        variant=net.variant,
        params=count_params(net),
        storage_bytes=os.path.getsize(weights_path),
        height=h,
        width=w,
        reps=reps,
        flops_full=count_flops(net, h, w, "full").total_flops,
        flops_preset=count_flops(net, h, w, "preset").total_flops,
        full_ms=full_ms,
        preset_ms=preset_ms,
    )


def cmd_bench(args) -> int:
    if args.reps < MIN_BENCH_REPS:
        raise ValueError(f"--reps must be >= {MIN_BENCH_REPS}, got {args.reps}")
    seed = _resolve_seed(args.seed)
    h, w = args.size
    rep = run_bench(args.weights, args.preset, h, w, args.reps, seed)
    print(f"{'':14s}{'mean':>10s}{'p50':>10s}{'p95':>10s}")
    print(f"{'full ms':14s}{rep.full_ms[0]:10.2f}{rep.full_ms[1]:10.2f}{rep.full_ms[2]:10.2f}")
    print(f"{'preset ms':14s}{rep.preset_ms[0]:10.2f}{rep.preset_ms[1]:10.2f}{rep.preset_ms[2]:10.2f}")
    print(f"params={rep.params}  storage={rep.storage_bytes}B  "
          f"gflops full={rep.flops_full / 1e9:.4f} preset={rep.flops_preset / 1e9:.4f}")
    print(f"speedup (p50 full/preset) = {rep.speedup:.3f}")
    if args.report:
        with open(args.report, "w") as f:
            f.write("\n".join(rep.as_lines()) + "\n")
        print(f"wrote {args.report}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="tfp", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for large layers (TFP_THREADS overrides)")

    p = sub.add_parser("init", help="write a fresh randomly initialized weight file")
    p.add_argument("--variant", choices=["TFP", "TFP-L"], default="TFP")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("stylize", help="texture-transfer a content image with a preset")
    p.add_argument("--weights", required=True)
    p.add_argument("--preset", required=True)
    p.add_argument("--content", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-s", type=float, default=None)
    p.add_argument("--lambda-d", type=float, default=None)
    p.add_argument("--out-tensor", default=None,
                   help="also dump the float output tensor (TFPT file)")
    common(p)
    p.set_defaults(func=cmd_stylize)

    p = sub.add_parser("texture", help="decode a pure texture image from seeded noise")
    p.add_argument("--weights", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--size", type=_parse_size, required=True, metavar="HxW")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-d", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_texture)

    p = sub.add_parser("preset", help="preset file operations")
    psub = p.add_subparsers(dest="preset_command", required=True)
    g = psub.add_parser("gen", help="capture a preset from seeded noise")
    g.add_argument("--weights", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--size", type=_parse_size, required=True, metavar="HxW")
    g.add_argument("--style-id", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--lambda-s", type=float, default=None)
    g.add_argument("--lambda-d", type=float, default=None)
    common(g)
    g.set_defaults(func=cmd_preset_gen)

    p = sub.add_parser("bench", help="time the full vs preset inference paths")
    p.add_argument("--weights", required=True)
    p.add_argument("--preset", required=True)
    p.add_argument("--size", type=_parse_size, required=True, metavar="HxW")
    p.add_argument("--reps", type=int, default=MIN_BENCH_REPS)
    p.add_argument("--report", default=None, help="write a key=value report file")
    p.add_argument("--seed", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_bench)
    return top


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    threads = os.environ.get("TFP_THREADS")
    set_num_threads(int(threads) if threads else args.threads)
    try:
        return args.func(args)
    except (FileFormatError, ShapeError, ArchError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
