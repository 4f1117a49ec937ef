"""Writers for the engine's binary formats (engine README, "File formats")
plus the parity fixture the engine is checked against.

The trainer deliberately does not import the engine package: these files
are the interface.
"""

from __future__ import annotations

import os
import pathlib
import struct

import numpy as np
import torch
from PIL import Image

from .model import SUBNET_NAMES, TextureTransferNet
from .noise import sample_noise

WEIGHT_MAGIC = b"TFPW"
PRESET_MAGIC = b"TFPP"
TENSOR_MAGIC = b"TFPT"
VERSION = 1

_KIND_CODE = {"conv": 0, "dwsep": 1}
_ACT_CODE = {"none": 0, "relu": 1, "tanh01": 2}


def _string(s: str) -> bytes:
    enc = s.encode("utf-8")
    return struct.pack("<I", len(enc)) + enc


def _f32_bytes(t: torch.Tensor | np.ndarray) -> bytes:
    arr = t.detach().cpu().numpy() if isinstance(t, torch.Tensor) else np.asarray(t)
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def write_weight_file(net: TextureTransferNet, path: str) -> None:
    buf = bytearray()
    buf += WEIGHT_MAGIC
    buf += struct.pack("<I", VERSION)
    buf += _string(net.variant)
    buf += struct.pack("<I", 4)  # downsample factor
    buf += struct.pack("<I", len(SUBNET_NAMES))
    for name in SUBNET_NAMES:
        layers = net.layers[name]
        buf += _string(name)
        buf += struct.pack("<I", len(layers))
        for l in layers:
            buf += struct.pack(
                "<BIIIIIBB",
                _KIND_CODE[l.kind], l.cin, l.cout, l.k, l.stride, l.upsample,
                1 if l.norm else 0, _ACT_CODE[l.act],
            )
    tensors = net.export_tensors()
    buf += struct.pack("<I", len(tensors))
    payload = bytearray()
    for name, tensor in tensors.items():
        buf += _string(name)
        shape = tuple(tensor.shape)
        buf += struct.pack("<I", len(shape))
        for d in shape:
            buf += struct.pack("<I", d)
        buf += struct.pack("<Q", len(payload))
        payload += _f32_bytes(tensor)
    buf += struct.pack("<Q", len(payload))
    buf += payload
    pathlib.Path(path).write_bytes(bytes(buf))


def write_preset_file(
    features: torch.Tensor,
    style_id: str,
    seed: int,
    source_size: tuple[int, int],
    lambda_s: float,
    lambda_d: float,
    path: str,
) -> None:
    buf = bytearray()
    buf += PRESET_MAGIC
    buf += struct.pack("<I", VERSION)
    buf += _string(style_id)
    buf += struct.pack("<Q", seed)
    buf += struct.pack("<II", source_size[0], source_size[1])
    buf += struct.pack("<ff", lambda_s, lambda_d)
    shape = tuple(features.shape)
    buf += struct.pack("<I", len(shape))
    for d in shape:
        buf += struct.pack("<I", d)
    raw = _f32_bytes(features)
    buf += struct.pack("<Q", len(raw))
    buf += raw
    pathlib.Path(path).write_bytes(bytes(buf))


def write_tensor_file(arr: torch.Tensor | np.ndarray, path: str) -> None:
    data = arr.detach().cpu().numpy() if isinstance(arr, torch.Tensor) else np.asarray(arr)
    buf = bytearray()
    buf += TENSOR_MAGIC
    buf += struct.pack("<I", VERSION)
    buf += struct.pack("<I", data.ndim)
    for d in data.shape:
        buf += struct.pack("<I", d)
    raw = _f32_bytes(data)
    buf += struct.pack("<Q", len(raw))
    buf += raw
    pathlib.Path(path).write_bytes(bytes(buf))


def read_tensor_file(path: str) -> np.ndarray:
    raw = pathlib.Path(path).read_bytes()
    if raw[:4] != TENSOR_MAGIC:
        raise ValueError(f"{path}: not a tensor file")
    off = 4
    (version,) = struct.unpack_from("<I", raw, off); off += 4
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    (ndim,) = struct.unpack_from("<I", raw, off); off += 4
    dims = struct.unpack_from(f"<{ndim}I", raw, off); off += 4 * ndim
    (nbytes,) = struct.unpack_from("<Q", raw, off); off += 8
    return np.frombuffer(raw, dtype="<f4", count=nbytes // 4, offset=off).reshape(dims).copy()


def quantize_to_png_values(img: torch.Tensor) -> torch.Tensor:
    """Round-trip pixels through the 8-bit PNG encoding so a fixture image
    computed from the returned tensor matches what any consumer reloads."""
    q = torch.round(torch.clamp(img, 0.0, 1.0) * 255.0)
    return q / 255.0


def save_png(img: torch.Tensor, path: str) -> None:
    q = torch.round(torch.clamp(img, 0.0, 1.0) * 255.0).to(torch.uint8)
    arr = q[0].permute(1, 2, 0).cpu().numpy()
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


@torch.no_grad()
def export_artifacts(
    net: TextureTransferNet,
    out_dir: str,
    style_id: str,
    seed: int,
    lambda_s: float,
    lambda_d: float,
    noise_size: int = 256,
    parity_content: torch.Tensor | None = None,
) -> dict[str, str]:
    """Write the weight file, a preset captured from portable seeded noise,
    and a parity fixture (content PNG + seed + the output tensor this
    network computes for them)."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = net.eval()

    weights_path = out / f"{style_id}.tfpw"
    write_weight_file(net, str(weights_path))

    noise = sample_noise(seed, noise_size, noise_size)
    features = net.enc_d(noise)
    preset_path = out / f"{style_id}.tfpp"
    write_preset_file(
        features, style_id, seed, (noise_size, noise_size), lambda_s, lambda_d,
        str(preset_path),
    )

    fixture = out / "parity"
    fixture.mkdir(exist_ok=True)
    if parity_content is None:
        yy = torch.linspace(0, 1, noise_size).view(1, 1, -1, 1)
        xx = torch.linspace(0, 1, noise_size).view(1, 1, 1, -1)
        parity_content = torch.cat(
            [0.5 + 0.4 * torch.sin(6.28 * yy) * torch.ones_like(xx),
             0.5 * yy + 0.5 * xx,
             0.5 + 0.4 * torch.cos(6.28 * xx) * torch.ones_like(yy)],
            dim=1,
        )
    content = quantize_to_png_values(parity_content.to(torch.float32))
    save_png(content, str(fixture / "content.png"))
    (fixture / "seed.txt").write_text(f"{seed}\n")
    f_s = net.enc_s(content)
    expected = net.dec_f(lambda_s * net.gate(f_s) + lambda_d * features)
    write_tensor_file(expected, str(fixture / "expected_output.tfpt"))

    return {
        "weights": str(weights_path),
        "preset": str(preset_path),
        "fixture": str(fixture),
    }
