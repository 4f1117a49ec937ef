"""Training loop: alternating discriminator/generator steps over seeded
content crops, style crops from one reference image, and fresh noise
batches.

The masked-TV term applies to the color branch with the content's edge
mask (texture suppression in smooth regions of the color output); every
other loss follows its definition in losses.py.
"""

from __future__ import annotations

import math
import pathlib
from dataclasses import dataclass, field

import torch
from torch.optim import Adam

from .config import LossWeights, TrainConfig
from .data import ContentDataset, StyleSource
from .losses import (
    LossTerms,
    adv_losses,
    branch_content_loss,
    branch_style_loss,
    edge_mask,
    fdc_loss,
    mtv_loss,
    stf_loss,
    style_grams,
    total_loss,
)
from .model import PatchDiscriminator, TextureTransferNet
from .perceptual import FeatureExtractor


@dataclass
class TrainResult:
    net: TextureTransferNet
    disc: PatchDiscriminator
    extractor: FeatureExtractor
    history: list[dict] = field(default_factory=list)
    checkpoints: list[str] = field(default_factory=list)


def _val(x) -> float:
    return float(x.detach()) if isinstance(x, torch.Tensor) else float(x)


def _terms_line(step: int, parts: LossTerms, full: float) -> str:
    return (
        f"step {step:5d}  full {full:12.4f}  "
        f"bc {_val(parts.branch_content):8.4f}  bs {_val(parts.branch_style):10.6f}  "
        f"adv {_val(parts.adversarial):6.4f}  mtv {_val(parts.masked_tv):10.1f}  "
        f"fdc {_val(parts.decoder_consistency):8.5f}  stf {_val(parts.semantic_texture_fusion):8.4f}"
    )


def train(
    cfg: TrainConfig,
    weights: LossWeights = LossWeights(),
    pretrained_vgg: bool = True,
    quiet: bool = False,
) -> TrainResult:
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)

    net = TextureTransferNet(cfg.variant)
    disc = PatchDiscriminator()
    extractor = FeatureExtractor(pretrained=pretrained_vgg, fallback_seed=cfg.seed)
    opt_g = Adam(net.parameters(), lr=cfg.lr)
    opt_d = Adam(disc.parameters(), lr=cfg.lr)

    dataset = ContentDataset(cfg.content_dir, cfg.content_resize, cfg.crop)
    style = StyleSource(cfg.style_image, cfg.crop)

    out_dir = pathlib.Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = TrainResult(net=net, disc=disc, extractor=extractor)

    for step in range(1, cfg.steps + 1):
        content = dataset.sample_batch(cfg.batch_size, gen)
        style_batch = style.sample_batch(cfg.batch_size, gen)
        noise = torch.randn(
            (cfg.batch_size, 3, cfg.noise_size, cfg.noise_size), generator=gen
        )
        grams = style_grams(extractor, style_batch)

        f_s = net.enc_s(content)
        f_n = net.enc_d(noise)
        f_c = net.enc_d(content)
        color = net.dec_s(f_s)
        tex_noise = net.fuse_decode(f_s, f_n, cfg.lambda_s, cfg.lambda_d)
        tex_content = net.fuse_decode(f_s, f_c, cfg.lambda_s, cfg.lambda_d)
        outputs = (color, tex_noise, tex_content)
        fakes = torch.cat(outputs, dim=0)

        d_loss, _ = adv_losses(disc, style_batch, fakes)
        opt_d.zero_grad()
        d_loss.backward(retain_graph=True)
        opt_d.step()

        _, g_adv = adv_losses(disc, style_batch, fakes)
        parts = LossTerms(
            branch_content=branch_content_loss(extractor, outputs, content),
            branch_style=branch_style_loss(extractor, outputs, grams),
            adversarial=g_adv,
            masked_tv=mtv_loss(color, edge_mask(content)),
            decoder_consistency=fdc_loss(net, f_s, cfg.lambda_s),
            semantic_texture_fusion=stf_loss(extractor, tex_noise, content, grams),
        )
        loss = total_loss(parts, weights)
        value = _val(loss)
        if not math.isfinite(value):
            raise RuntimeError(
                f"non-finite loss at step {step}: {_terms_line(step, parts, value)}"
            )
        opt_g.zero_grad()
        loss.backward()
        opt_g.step()

        record = {
            "step": step,
            "full": value,
            "d_loss": _val(d_loss),
            "branch_content": _val(parts.branch_content),
            "branch_style": _val(parts.branch_style),
            "adversarial": _val(parts.adversarial),
            "masked_tv": _val(parts.masked_tv),
            "decoder_consistency": _val(parts.decoder_consistency),
            "semantic_texture_fusion": _val(parts.semantic_texture_fusion),
        }
        result.history.append(record)
        if not quiet and (step == 1 or step % cfg.log_every == 0):
            print(_terms_line(step, parts, value))
        if step % cfg.checkpoint_every == 0 or step == cfg.steps:
            path = out_dir / f"checkpoint_{step:06d}.pt"
            torch.save(
                {"step": step, "net": net.state_dict(), "disc": disc.state_dict()},
                path,
            )
            result.checkpoints.append(str(path))
    return result
