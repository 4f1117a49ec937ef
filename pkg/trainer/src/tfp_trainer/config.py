"""Training configuration dataclasses."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LossWeights:
    """Relative weights of the six training loss terms."""

    branch_content: float = 1e0
    branch_style: float = 1e5
    adversarial: float = 1e0
    masked_tv: float = 2e-5
    decoder_consistency: float = 1e0
    semantic_texture_fusion: float = 1e0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"loss weight {name} must be >= 0, got {value}")


@dataclass(frozen=True)
class TrainConfig:
    content_dir: str
    style_image: str
    out_dir: str
    steps: int = 200
    batch_size: int = 4
    lr: float = 0.001
    content_resize: int = 512
    crop: int = 256
    noise_size: int = 256
    seed: int = 0
    variant: str = "TFP"
    lambda_s: float = 1.0
    lambda_d: float = 1.0
    log_every: int = 10
    checkpoint_every: int = 100

    def __post_init__(self):
        if self.crop % 4 or self.noise_size % 4:
            raise ValueError("crop and noise sizes must be multiples of 4")
        if self.batch_size < 1 or self.steps < 1:
            raise ValueError("batch_size and steps must be positive")
