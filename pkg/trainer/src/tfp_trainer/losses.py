"""Training losses.

Six terms drive training, combined by their configured weights:
branch content (perceptual distance of all three branch outputs to the
content), branch style (Gram matching at per-branch feature levels),
adversarial (least-squares patch discrimination), masked total variation
(artifact suppression away from content edges), decoder consistency
(shallow and fusion decoders agree on shallow-only input), and semantic
texture fusion (content+style constraint specifically on the
noise-fused output, keeping semantics visible through the texture).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .config import LossWeights
from .perceptual import COLOR_STYLE_TAPS, CONTENT_TAP, TEXTURE_STYLE_TAPS, FeatureExtractor

STF_STYLE_SCALE = 1e5  # internal content:style balance, mirrors the global weights


def gram(f: torch.Tensor) -> torch.Tensor:
    """Channel covariance per batch element: G = F F^T / (C*H*W) with F the
    (C, H*W) flattening."""
    b, c, h, w = f.shape
    flat = f.reshape(b, c, h * w)
    return flat @ flat.transpose(1, 2) / (c * h * w)


def perceptual_content_term(
    extractor: FeatureExtractor, output: torch.Tensor, target_feats: torch.Tensor
) -> torch.Tensor:
    return F.mse_loss(extractor(output, (CONTENT_TAP,))[CONTENT_TAP], target_feats)


def branch_content_loss(
    extractor: FeatureExtractor,
    outputs: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    content: torch.Tensor,
) -> torch.Tensor:
    """Perceptual distance to the content, summed over the three branches."""
    with torch.no_grad():
        target = extractor(content, (CONTENT_TAP,))[CONTENT_TAP]
    return sum(perceptual_content_term(extractor, out, target) for out in outputs)


def _gram_distance(
    extractor: FeatureExtractor,
    output: torch.Tensor,
    style_grams: dict[str, torch.Tensor],
    taps: tuple[str, ...],
) -> torch.Tensor:
    feats = extractor(output, taps)
    total = output.new_zeros(())
    for tap in taps:
        if tap not in feats or tap not in style_grams:
            continue
        g = gram(feats[tap])
        target = style_grams[tap]
        if target.shape[0] != g.shape[0]:
            target = target.mean(dim=0, keepdim=True).expand_as(g)
        total = total + F.mse_loss(g, target)
    return total


def style_grams(extractor: FeatureExtractor, style: torch.Tensor) -> dict[str, torch.Tensor]:
    taps = tuple(dict.fromkeys(COLOR_STYLE_TAPS + TEXTURE_STYLE_TAPS))
    with torch.no_grad():
        feats = extractor(style, taps)
    return {tap: gram(f) for tap, f in feats.items()}


def branch_style_loss(
    extractor: FeatureExtractor,
    outputs: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
    grams: dict[str, torch.Tensor],
) -> torch.Tensor:
    """Gram matching: shallow levels only for the color branch, the full tap
    stack for both texture branches."""
    color, tex_noise, tex_content = outputs
    loss = _gram_distance(extractor, color, grams, COLOR_STYLE_TAPS)
    loss = loss + _gram_distance(extractor, tex_noise, grams, TEXTURE_STYLE_TAPS)
    loss = loss + _gram_distance(extractor, tex_content, grams, TEXTURE_STYLE_TAPS)
    return loss


def edge_mask(content: torch.Tensor, quantile: float = 0.9) -> torch.Tensor:
    """Dilated Sobel-edge mask (1 = edge zone, excluded from the TV sum)."""
    gray = content.mean(dim=1, keepdim=True)
    kx = content.new_tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]).view(1, 1, 3, 3)
    gx = F.conv2d(gray, kx, padding=1)
    gy = F.conv2d(gray, kx.transpose(2, 3), padding=1)
    mag = torch.sqrt(gx * gx + gy * gy)
    thresh = torch.quantile(mag.flatten(1), quantile, dim=1).view(-1, 1, 1, 1)
    mask = (mag > thresh).to(content.dtype)
    return F.max_pool2d(mask, kernel_size=3, stride=1, padding=1)


def mtv_loss(image: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Total variation summed over pixel pairs whose endpoints are both
    unmasked, averaged over the batch."""
    keep = 1.0 - mask
    dh = (image[:, :, 1:, :] - image[:, :, :-1, :]).abs()
    dw = (image[:, :, :, 1:] - image[:, :, :, :-1]).abs()
    keep_h = keep[:, :, 1:, :] * keep[:, :, :-1, :]
    keep_w = keep[:, :, :, 1:] * keep[:, :, :, :-1]
    total = (dh * keep_h).sum(dim=(1, 2, 3)) + (dw * keep_w).sum(dim=(1, 2, 3))
    return total.mean()


def fdc_loss(net, f_s: torch.Tensor, lambda_s: float = 1.0) -> torch.Tensor:
    """Decoder consistency: with the deep branch silent, the fusion decoder
    should reproduce the shallow decoder."""
    return F.mse_loss(net.dec_s(f_s), net.dec_f(lambda_s * net.gate(f_s)))


def stf_loss(
    extractor: FeatureExtractor,
    tex_noise: torch.Tensor,
    content: torch.Tensor,
    grams: dict[str, torch.Tensor],
) -> torch.Tensor:
    """Content + style constraint on the noise-fused output specifically, so
    texture injection cannot mask the content semantics."""
    with torch.no_grad():
        target = extractor(content, (CONTENT_TAP,))[CONTENT_TAP]
    content_term = perceptual_content_term(extractor, tex_noise, target)
    style_term = _gram_distance(extractor, tex_noise, grams, TEXTURE_STYLE_TAPS)
    return content_term + STF_STYLE_SCALE * style_term


def adv_losses(disc, real: torch.Tensor, fakes: torch.Tensor):
    """Least-squares GAN on patch logits: (d_loss, g_loss). d_loss averages
    the real side (target 1) and the fake side (target 0); g_loss pushes
    fakes toward 1."""
    real_term = ((disc(real) - 1.0) ** 2).mean()
    fake_term = (disc(fakes.detach()) ** 2).mean()
    d_loss = 0.5 * (real_term + fake_term)
    g_loss = ((disc(fakes) - 1.0) ** 2).mean()
    return d_loss, g_loss


@dataclass
class LossTerms:
    branch_content: torch.Tensor | float
    branch_style: torch.Tensor | float
    adversarial: torch.Tensor | float
    masked_tv: torch.Tensor | float
    decoder_consistency: torch.Tensor | float
    semantic_texture_fusion: torch.Tensor | float


def total_loss(parts: LossTerms, w: LossWeights):
    """Exact weighted sum of the six terms."""
    return (
        w.branch_content * parts.branch_content
        + w.branch_style * parts.branch_style
        + w.adversarial * parts.adversarial
        + w.masked_tv * parts.masked_tv
        + w.decoder_consistency * parts.decoder_consistency
        + w.semantic_texture_fusion * parts.semantic_texture_fusion
    )
