"""Preset texture feature maps: capture once per (style, seed), reuse for
every content image.

A preset stores the deep encoder's output on a seeded standard-normal
noise image. Stylizing with it fuses the content's gated shallow features
with the stored map and decodes, never touching the deep encoder; for
content sizes other than the capture size the map is tiled periodically
(texture features repeat, so wrapping preserves their scale where
interpolation would stretch it).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import FusionConfig, ShapeError
from .net import Network, dec_fusion, enc_deep, enc_shallow

__all__ = ["Preset", "capture_preset", "fit_preset", "stylize_with_preset"]


@dataclass(frozen=True)
class Preset:
    features: np.ndarray = field(repr=False)  # (1, c, h, w) float32
    style_id: str
    seed: int
    source_size: tuple[int, int]  # noise (H, W) the features were captured from
    recommended: FusionConfig = FusionConfig(1.0, 1.0)
    format_version: int = 1

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float32)
        if f.ndim != 4 or f.shape[0] != 1:
            raise ShapeError(f"preset features must be (1, c, h, w), got {f.shape}")
        h, w = self.source_size
        if f.shape[2] * 4 != h or f.shape[3] * 4 != w:
            raise ShapeError(
                f"feature plane {f.shape[2]}x{f.shape[3]} inconsistent with "
                f"source noise {h}x{w} at 4x downsample"
            )
        if not np.all(np.isfinite(f)):
            raise ValueError("preset features contain non-finite values")
        object.__setattr__(self, "features", f)


def capture_preset(
    net: Network,
    noise_img: np.ndarray,
    style_id: str,
    seed: int,
    recommended: FusionConfig | None = None,
) -> Preset:
    """Encode the noise image once and freeze the result with its provenance."""
    features = enc_deep(net, noise_img)
    return Preset(
        features=features,
        style_id=style_id,
        seed=int(seed),
        source_size=(noise_img.shape[2], noise_img.shape[3]),
        recommended=recommended if recommended is not None else FusionConfig(1.0, 1.0),
    )


def fit_preset(preset: Preset, target_h: int, target_w: int) -> np.ndarray:
    """Tile the stored feature map periodically to cover target_h x target_w.

    Exact identity (same values) when the target equals the stored plane.
    """
    if target_h < 1 or target_w < 1:
        raise ValueError(f"target size must be positive, got {target_h}x{target_w}")
    f = preset.features
    h, w = f.shape[2], f.shape[3]
    reps_h = -(-target_h // h)
    reps_w = -(-target_w // w)
    return np.tile(f, (1, 1, reps_h, reps_w))[:, :, :target_h, :target_w]


def stylize_with_preset(
    net: Network,
    preset: Preset,
    content: np.ndarray,
    cfg: FusionConfig | None = None,
) -> np.ndarray:
    """Texture-transfer a content image using the stored deep features.

    Equivalent to the full pipeline on (content, preset noise) but skips
    deep encoding entirely. Content dims must already be multiples of 4.
    """
    if preset.features.shape[1] != net.spec.feature_channels:
        raise ShapeError(
            f"preset has {preset.features.shape[1]} channels, network fuses "
            f"{net.spec.feature_channels}"
        )
    if cfg is None:
        cfg = preset.recommended
    f_s = enc_shallow(net, content)
    f_d = fit_preset(preset, f_s.shape[2], f_s.shape[3])
    return dec_fusion(net, f_s, f_d, cfg)
