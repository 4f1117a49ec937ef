"""PNG/JPEG loading, PNG writing, and the pad/crop dance for sizes that are
not multiples of 4. Pixels map linearly between [0, 255] bytes and [0, 1]
floats; output is always 8-bit RGB PNG so identical tensors give
byte-identical files.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np
from PIL import Image

__all__ = ["crop_to", "load_image", "pad_to_multiple", "save_image", "to_uint8"]


def load_image(path: str) -> np.ndarray:
    """Read an image file into a (1, 3, H, W) float32 tensor in [0, 1]."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float32)
    return np.ascontiguousarray(rgb.transpose(2, 0, 1)[None]) / np.float32(255.0)


def to_uint8(x: np.ndarray) -> np.ndarray:
    """(1, 3, H, W) floats in [0, 1] -> (H, W, 3) uint8, clipping out-of-range."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 4 or x.shape[0] != 1 or x.shape[1] != 3:
        raise ValueError(f"expected a (1, 3, h, w) tensor, got {x.shape}")
    scaled = np.rint(np.clip(x[0], 0.0, 1.0) * 255.0)
    return scaled.astype(np.uint8).transpose(1, 2, 0)


def save_image(x: np.ndarray, path: str) -> None:
    """Write an 8-bit RGB PNG atomically (no partial file on failure)."""
    img = Image.fromarray(to_uint8(x), mode="RGB")
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".png.tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            img.save(f, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def pad_to_multiple(x: np.ndarray, multiple: int = 4) -> tuple[np.ndarray, tuple[int, int]]:
    """Reflect-pad bottom/right so H and W divide ``multiple``.

    Returns the padded tensor and the original (H, W) for cropping back.
    Reflection avoids the dark halo zero-padding would smear in from the
    border. Degenerate 1-pixel dims fall back to edge replication.
    """
    h, w = x.shape[2], x.shape[3]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return x, (h, w)
    mode = "reflect" if min(h, w) > max(ph, pw) else "edge"
    padded = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), mode=mode)
    return padded, (h, w)


def crop_to(x: np.ndarray, h: int, w: int) -> np.ndarray:
    return np.ascontiguousarray(x[:, :, :h, :w])
