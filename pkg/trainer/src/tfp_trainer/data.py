"""Seeded data pipeline: content images resized then randomly cropped, and
style batches cropped from one reference style image."""

from __future__ import annotations

import pathlib

import torch
from PIL import Image

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


def load_image_tensor(path: str | pathlib.Path) -> torch.Tensor:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        import numpy as np

        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(arr.transpose(2, 0, 1).copy())


def _resize_shorter(img: torch.Tensor, target: int) -> torch.Tensor:
    _, h, w = img.shape
    short = min(h, w)
    if short == target:
        return img
    scale = target / short
    nh, nw = max(target, round(h * scale)), max(target, round(w * scale))
    return torch.nn.functional.interpolate(
        img[None], size=(nh, nw), mode="bilinear", align_corners=False
    )[0]


def _random_crop(img: torch.Tensor, size: int, gen: torch.Generator) -> torch.Tensor:
    _, h, w = img.shape
    if h < size or w < size:
        img = _resize_shorter(img, size)
        _, h, w = img.shape
    top = int(torch.randint(0, h - size + 1, (1,), generator=gen))
    left = int(torch.randint(0, w - size + 1, (1,), generator=gen))
    return img[:, top : top + size, left : left + size]


class ContentDataset:
    """Directory of content images; batches are resize-then-random-crop."""

    def __init__(self, content_dir: str, resize: int, crop: int):
        root = pathlib.Path(content_dir)
        self.paths = sorted(
            p for p in root.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not self.paths:
            raise FileNotFoundError(f"no images under {content_dir}")
        self.resize = resize
        self.crop = crop
        self._cache: dict[pathlib.Path, torch.Tensor] = {}

    def _load(self, path: pathlib.Path) -> torch.Tensor:
        if path not in self._cache:
            self._cache[path] = _resize_shorter(load_image_tensor(path), self.resize)
        return self._cache[path]

    def sample_batch(self, batch_size: int, gen: torch.Generator) -> torch.Tensor:
        picks = torch.randint(0, len(self.paths), (batch_size,), generator=gen)
        return torch.stack(
            [_random_crop(self._load(self.paths[int(i)]), self.crop, gen) for i in picks]
        )


class StyleSource:
    """One reference style image; every batch is random crops of it."""

    def __init__(self, style_image: str, crop: int):
        self.image = load_image_tensor(style_image)
        if min(self.image.shape[1:]) < crop:
            self.image = _resize_shorter(self.image, crop)
        self.crop = crop

    def sample_batch(self, batch_size: int, gen: torch.Generator) -> torch.Tensor:
        return torch.stack(
            [_random_crop(self.image, self.crop, gen) for _ in range(batch_size)]
        )
