"""Frozen VGG-16 feature extractor for the perceptual and Gram losses.

Pretrained ImageNet weights are used when torchvision can provide them;
otherwise (offline environments) the same topology is frozen at a fixed
seeded He initialization. Random projections still define a usable
perceptual metric for loss plumbing, gradient checks, and small overfit
runs; they are not expected to reach publication-quality stylization.

Taps are named after the VGG relu layers. Inputs are [0,1] RGB, normalized
with the ImageNet statistics before the stack. Taps whose spatial size
would collapse below 1x1 at a given input size are skipped, so tiny probe
tensors remain usable.
"""

from __future__ import annotations

import torch
import torch.nn as nn
from torchvision import models

# Indices of the relu activations in torchvision's vgg16().features.
TAP_INDEX = {
    "relu1_2": 3,
    "relu2_1": 6,
    "relu2_2": 8,
    "relu3_3": 15,
    "relu4_3": 22,
}

CONTENT_TAP = "relu2_1"
COLOR_STYLE_TAPS = ("relu1_2", "relu2_2")
TEXTURE_STYLE_TAPS = ("relu1_2", "relu2_2", "relu3_3", "relu4_3")

_MEAN = (0.485, 0.456, 0.406)
_STD = (0.229, 0.224, 0.225)


class FeatureExtractor(nn.Module):
    def __init__(self, pretrained: bool = True, fallback_seed: int = 0):
        super().__init__()
        self.pretrained = False
        features = None
        if pretrained:
            try:
                features = models.vgg16(weights=models.VGG16_Weights.IMAGENET1K_V1).features
                self.pretrained = True
            except Exception:
                features = None
        if features is None:
            torch.manual_seed(fallback_seed)
            features = models.vgg16(weights=None).features
        self.features = features[: max(TAP_INDEX.values()) + 1]
        if not self.pretrained:
            self._calibrate_random_features(fallback_seed)
        for p in self.features.parameters():
            p.requires_grad_(False)
        self.eval()
        mean = torch.tensor(_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(_STD).view(1, 3, 1, 1)
        self.register_buffer("mean", mean)
        self.register_buffer("std", std)

    _RANDOM_FEATURE_STD = 10.0

    @torch.no_grad()
    def _calibrate_random_features(self, seed: int) -> None:
        """Layer-sequential rescale of the random init so every conv output
        has std ~10, the magnitude regime of the pretrained stack. Without
        this, random-feature Grams are ~1e-6 scale and the style terms the
        1e5 weight was balanced for vanish from the total loss."""
        gen = torch.Generator().manual_seed(seed)
        h = torch.rand((2, 3, 64, 64), generator=gen)
        for layer in self.features:
            if isinstance(layer, nn.Conv2d):
                out = layer(h)
                std = float(out.std())
                if std > 0:
                    layer.weight.mul_(self._RANDOM_FEATURE_STD / std)
                    layer.bias.mul_(self._RANDOM_FEATURE_STD / std)
            h = layer(h)

    def train(self, mode: bool = True):  # frozen: ignore train/eval toggles
        return super().train(False)

    def forward(self, x: torch.Tensor, taps: tuple[str, ...]) -> dict[str, torch.Tensor]:
        wanted = {TAP_INDEX[t]: t for t in taps}
        last = max(wanted)
        out: dict[str, torch.Tensor] = {}
        h = (x - self.mean.to(x.dtype)) / self.std.to(x.dtype)
        for idx, layer in enumerate(self.features):
            if isinstance(layer, nn.MaxPool2d) and min(h.shape[-2:]) < 2:
                break  # deeper taps undefined at this resolution
            h = layer(h)
            if idx in wanted:
                out[wanted[idx]] = h
            if idx == last:
                break
        return out
