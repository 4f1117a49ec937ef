"""Torch implementation of the texture-transfer network, kept layer-for-layer
compatible with the engine's weight-file format (see the engine README,
"File formats"): optional nearest upsample, cross-correlation conv with
zero padding k//2 or depthwise+pointwise pair, instance norm (biased
variance, eps=1e-5), then none/relu/tanh01. The gate is a bare 1x1 conv
applied as f * sigmoid(conv(f)).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

SUBNET_NAMES = ("enc_s", "dec_s", "enc_d", "dec_f", "dae")
KINDS = ("conv", "dwsep")
ACTIVATIONS = ("none", "relu", "tanh01")


@dataclass(frozen=True)
class Layer:
    kind: str
    cin: int
    cout: int
    k: int = 3
    stride: int = 1
    upsample: int = 1
    norm: bool = True
    act: str = "relu"


def arch_layers(variant: str = "TFP") -> dict[str, tuple[Layer, ...]]:
    """The shipped engine architectures (TFP: 20 mid channels, TFP-L: 16)."""
    if variant == "TFP":
        mid = 20
    elif variant == "TFP-L":
        mid = 16
    else:
        raise ValueError(f"unknown variant {variant!r}")
    stem = 8
    enc_s = (
        Layer("conv", 3, stem, stride=2),
        Layer("dwsep", stem, mid, stride=2),
        Layer("dwsep", mid, mid),
    )
    dec = (
        Layer("dwsep", mid, mid),
        Layer("dwsep", mid, 4, upsample=2),
        Layer("dwsep", 4, 4, upsample=2),
        Layer("conv", 4, 3, k=1, norm=False, act="tanh01"),
    )
    enc_d = (
        Layer("conv", 3, stem, stride=2),
        Layer("dwsep", stem, mid, stride=2),
        Layer("dwsep", mid, mid),
        Layer("dwsep", mid, mid),
        Layer("dwsep", mid, mid),
        Layer("conv", mid, mid),
    )
    gate = Layer("conv", mid, mid, k=1, norm=False, act="none")
    return {"enc_s": enc_s, "dec_s": dec, "enc_d": enc_d, "dec_f": dec, "dae": (gate,)}


class LayerBlock(nn.Module):
    def __init__(self, spec: Layer):
        super().__init__()
        self.spec = spec
        pad = spec.k // 2
        if spec.kind == "conv":
            self.conv = nn.Conv2d(spec.cin, spec.cout, spec.k, spec.stride, pad)
        else:
            self.dw = nn.Conv2d(spec.cin, spec.cin, spec.k, spec.stride, pad, groups=spec.cin)
            self.pw = nn.Conv2d(spec.cin, spec.cout, 1)
        self.norm = nn.InstanceNorm2d(spec.cout, eps=1e-5, affine=True) if spec.norm else None

    def forward(self, x):
        if self.spec.upsample > 1:
            x = F.interpolate(x, scale_factor=self.spec.upsample, mode="nearest")
        if self.spec.kind == "conv":
            x = self.conv(x)
        else:
            x = self.pw(self.dw(x))
        if self.norm is not None:
            x = self.norm(x)
        if self.spec.act == "relu":
            x = F.relu(x)
        elif self.spec.act == "tanh01":
            x = 0.5 * (torch.tanh(x) + 1.0)
        return x


class Subnet(nn.Module):
    def __init__(self, layers: tuple[Layer, ...]):
        super().__init__()
        self.blocks = nn.ModuleList(LayerBlock(l) for l in layers)

    def forward(self, x):
        for block in self.blocks:
            x = block(x)
        return x


class TextureTransferNet(nn.Module):
    """Shallow encoder/decoder for color+detail, deep encoder/fusion decoder
    for texture, and the sigmoid gate on shallow features."""

    def __init__(self, variant: str = "TFP"):
        super().__init__()
        self.variant = variant
        layers = arch_layers(variant)
        self.layers = layers
        self.enc_s = Subnet(layers["enc_s"])
        self.dec_s = Subnet(layers["dec_s"])
        self.enc_d = Subnet(layers["enc_d"])
        self.dec_f = Subnet(layers["dec_f"])
        self.dae = Subnet(layers["dae"])

    def gate(self, f_s):
        return f_s * torch.sigmoid(self.dae(f_s))

    def fuse_decode(self, f_s, f_d, lambda_s: float, lambda_d: float):
        return self.dec_f(lambda_s * self.gate(f_s) + lambda_d * f_d)

    def forward(self, content, noise, lambda_s: float = 1.0, lambda_d: float = 1.0):
        """Returns (color, texture_from_noise, texture_from_content)."""
        f_s = self.enc_s(content)
        f_n = self.enc_d(noise)
        f_c = self.enc_d(content)
        return (
            self.dec_s(f_s),
            self.fuse_decode(f_s, f_n, lambda_s, lambda_d),
            self.fuse_decode(f_s, f_c, lambda_s, lambda_d),
        )

    def export_tensors(self) -> dict[str, torch.Tensor]:
        """Parameters keyed with the engine weight-file naming scheme."""
        out: dict[str, torch.Tensor] = {}
        for name in SUBNET_NAMES:
            subnet: Subnet = getattr(self, name)
            for i, block in enumerate(subnet.blocks):
                prefix = f"{name}.{i}"
                if block.spec.kind == "conv":
                    out[f"{prefix}.weight"] = block.conv.weight
                    out[f"{prefix}.bias"] = block.conv.bias
                else:
                    out[f"{prefix}.dw_weight"] = block.dw.weight
                    out[f"{prefix}.dw_bias"] = block.dw.bias
                    out[f"{prefix}.pw_weight"] = block.pw.weight
                    out[f"{prefix}.pw_bias"] = block.pw.bias
                if block.norm is not None:
                    out[f"{prefix}.gamma"] = block.norm.weight
                    out[f"{prefix}.beta"] = block.norm.bias
        return out

    def count_params(self) -> int:
        return sum(t.numel() for t in self.export_tensors().values())


class PatchDiscriminator(nn.Module):
    """Small patch-level classifier; training-only, never exported."""

    def __init__(self):
        super().__init__()
        # single stride-2 stage so probes as small as 4x4 still reach the
        # norm with >1 spatial element
        self.net = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(16, 32, 3, stride=1, padding=1),
            nn.InstanceNorm2d(32, affine=True),
            nn.LeakyReLU(0.2),
            nn.Conv2d(32, 1, 3, padding=1),
        )

    def forward(self, x):
        return self.net(x)
