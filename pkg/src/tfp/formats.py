"""Binary file formats for weights, presets, and raw tensors.

All integers and floats little-endian; tensor payloads are row-major
float32. Strings are a u32 byte length followed by UTF-8 bytes.

Weight file ("TFPW", version 1)
    magic "TFPW" | u32 version
    str variant | u32 downsample_factor
    u32 n_subnets, then per subnet:
        str name | u32 n_layers, then per layer:
            u8 kind (0 conv, 1 dwsep) | u32 cin | u32 cout | u32 k
            u32 stride | u32 upsample | u8 norm | u8 act (0 none, 1 relu, 2 tanh01)
    u32 n_tensors, then per tensor:
        str name | u32 ndim | u32 dims[ndim] | u64 byte offset into payload
    u64 payload_bytes | payload

Preset file ("TFPP", version 1)
    magic "TFPP" | u32 version
    str style_id | u64 seed | u32 source_h | u32 source_w
    f32 lambda_s | f32 lambda_d          (recommended fusion strengths)
    u32 ndim | u32 dims[ndim] | u64 payload_bytes | payload

Tensor file ("TFPT", version 1)
    magic "TFPT" | u32 version | u32 ndim | u32 dims[ndim]
    u64 payload_bytes | payload
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .kernels import FusionConfig
from .net import ACTIVATIONS, KINDS, ArchSpec, LayerSpec, Network, SUBNET_NAMES, build, param_shapes
from .preset import Preset

__all__ = [
    "BadMagicError",
    "FileFormatError",
    "ShapeMismatchError",
    "TruncatedFileError",
    "VersionMismatchError",
    "WEIGHT_VERSION",
    "PRESET_VERSION",
    "TENSOR_VERSION",
    "load_preset",
    "load_tensor",
    "load_weights",
    "save_preset",
    "save_tensor",
    "save_weights",
]

WEIGHT_MAGIC = b"TFPW"
PRESET_MAGIC = b"TFPP"
TENSOR_MAGIC = b"TFPT"
WEIGHT_VERSION = 1
PRESET_VERSION = 1
TENSOR_VERSION = 1


class FileFormatError(Exception):
    """Base class for malformed weight/preset/tensor files."""


class BadMagicError(FileFormatError):
    pass


class VersionMismatchError(FileFormatError):
    pass


class TruncatedFileError(FileFormatError):
    pass


class ShapeMismatchError(FileFormatError):
    pass


def _atomic_write(path: str, data: bytes) -> None:
    # Never leave a partial file behind on failure.
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Writer:
    def __init__(self):
        self.buf = bytearray()

    def raw(self, b: bytes):
        self.buf += b

    def u8(self, v: int):
        self.buf += struct.pack("<B", v)

    def u32(self, v: int):
        self.buf += struct.pack("<I", v)

    def u64(self, v: int):
        self.buf += struct.pack("<Q", v)

    def f32(self, v: float):
        self.buf += struct.pack("<f", v)

    def string(self, s: str):
        enc = s.encode("utf-8")
        self.u32(len(enc))
        self.raw(enc)


class _Reader:
    def __init__(self, data: bytes, label: str):
        self.data = data
        self.off = 0
        self.label = label

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise TruncatedFileError(
                f"{self.label}: needed {n} bytes at offset {self.off}, "
                f"file has {len(self.data)}"
            )
        b = self.data[self.off : self.off + n]
        self.off += n
        return b

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f32(self) -> float:
        return struct.unpack("<f", self.take(4))[0]

    def string(self) -> str:
        n = self.u32()
        return self.take(n).decode("utf-8")

    def expect_done(self):
        if self.off != len(self.data):
            raise FileFormatError(
                f"{self.label}: {len(self.data) - self.off} trailing bytes"
            )


def _check_magic(r: _Reader, magic: bytes):
    got = r.take(4)
    if got != magic:
        raise BadMagicError(f"{r.label}: bad magic {got!r}, expected {magic!r}")


def _check_version(r: _Reader, want: int):
    got = r.u32()
    if got != want:
        raise VersionMismatchError(f"{r.label}: version {got}, supported {want}")


def _tensor_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _read_dims(r: _Reader) -> tuple[int, ...]:
    ndim = r.u32()
    if ndim > 8:
        raise FileFormatError(f"{r.label}: implausible rank {ndim}")
    return tuple(r.u32() for _ in range(ndim))


def _read_payload(r: _Reader, shape: tuple[int, ...]) -> np.ndarray:
    declared = r.u64()
    want = 4 * int(np.prod(shape)) if shape else 4
    if declared != want:
        raise ShapeMismatchError(
            f"{r.label}: payload of {declared} bytes does not match shape {shape}"
        )
    raw = r.take(declared)
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)


# --- weight files -----------------------------------------------------------

_KIND_CODE = {k: i for i, k in enumerate(KINDS)}
_ACT_CODE = {a: i for i, a in enumerate(ACTIVATIONS)}


def save_weights(net: Network, path: str) -> None:
    w = _Writer()
    w.raw(WEIGHT_MAGIC)
    w.u32(WEIGHT_VERSION)
    w.string(net.spec.variant)
    w.u32(net.spec.downsample)
    w.u32(len(SUBNET_NAMES))
    for name in SUBNET_NAMES:
        layers = net.spec.subnet(name)
        w.string(name)
        w.u32(len(layers))
        for l in layers:
            w.u8(_KIND_CODE[l.kind])
            w.u32(l.cin)
            w.u32(l.cout)
            w.u32(l.k)
            w.u32(l.stride)
            w.u32(l.upsample)
            w.u8(1 if l.norm else 0)
            w.u8(_ACT_CODE[l.act])
    names = list(param_shapes(net.spec))
    w.u32(len(names))
    payload = bytearray()
    for name in names:
        arr = net.params[name]
        w.string(name)
        w.u32(arr.ndim)
        for d in arr.shape:
            w.u32(d)
        w.u64(len(payload))
        payload += _tensor_bytes(arr)
    w.u64(len(payload))
    w.raw(bytes(payload))
    _atomic_write(path, bytes(w.buf))


def _read_arch(r: _Reader) -> ArchSpec:
    variant = r.string()
    downsample = r.u32()
    n_subnets = r.u32()
    if n_subnets != len(SUBNET_NAMES):
        raise FileFormatError(f"{r.label}: expected {len(SUBNET_NAMES)} subnets, got {n_subnets}")
    subnets: dict[str, tuple[LayerSpec, ...]] = {}
    for _ in range(n_subnets):
        name = r.string()
        if name not in SUBNET_NAMES:
            raise FileFormatError(f"{r.label}: unknown subnet {name!r}")
        layers = []
        for _ in range(r.u32()):
            kind_c, cin, cout, k, stride, upsample = (
                r.u8(), r.u32(), r.u32(), r.u32(), r.u32(), r.u32(),
            )
            norm, act_c = r.u8(), r.u8()
            if kind_c >= len(KINDS) or act_c >= len(ACTIVATIONS):
                raise FileFormatError(f"{r.label}: bad layer codes in {name}")
            layers.append(
                LayerSpec(KINDS[kind_c], cin, cout, k, stride, upsample, bool(norm), ACTIVATIONS[act_c])
            )
        subnets[name] = tuple(layers)
    missing = set(SUBNET_NAMES) - set(subnets)
    if missing:
        raise FileFormatError(f"{r.label}: missing subnets {sorted(missing)}")
    if len(subnets["dae"]) != 1:
        raise FileFormatError(f"{r.label}: gate subnet must have exactly one layer")
    return ArchSpec(
        variant=variant,
        enc_s=subnets["enc_s"],
        dec_s=subnets["dec_s"],
        enc_d=subnets["enc_d"],
        dec_f=subnets["dec_f"],
        dae=subnets["dae"][0],
        downsample=downsample,
    )


def load_weights(path: str) -> Network:
    with open(path, "rb") as f:
        r = _Reader(f.read(), os.path.basename(path))
    _check_magic(r, WEIGHT_MAGIC)
    _check_version(r, WEIGHT_VERSION)
    spec = _read_arch(r)
    expected = param_shapes(spec)
    n_tensors = r.u32()
    directory: list[tuple[str, tuple[int, ...], int]] = []
    for _ in range(n_tensors):
        name = r.string()
        shape = _read_dims(r)
        offset = r.u64()
        directory.append((name, shape, offset))
    payload_bytes = r.u64()
    payload = r.take(payload_bytes)
    r.expect_done()

    got_names = {name for name, _, _ in directory}
    if got_names != set(expected):
        missing = sorted(set(expected) - got_names)
        extra = sorted(got_names - set(expected))
        raise ShapeMismatchError(
            f"{r.label}: tensor directory mismatch vs architecture "
            f"(missing {missing}, extra {extra})"
        )
    params: dict[str, np.ndarray] = {}
    for name, shape, offset in directory:
        if shape != expected[name]:
            raise ShapeMismatchError(
                f"{r.label}: {name} has shape {shape}, architecture wants {expected[name]}"
            )
        nbytes = 4 * int(np.prod(shape))
        if offset + nbytes > payload_bytes:
            raise TruncatedFileError(
                f"{r.label}: {name} extends past payload "
                f"({offset}+{nbytes} > {payload_bytes})"
            )
        arr = np.frombuffer(payload, dtype="<f4", count=nbytes // 4, offset=offset)
        params[name] = arr.reshape(shape).astype(np.float32)
    return build(spec, params=params)


# --- preset files -----------------------------------------------------------


def save_preset(preset: Preset, path: str) -> None:
    w = _Writer()
    w.raw(PRESET_MAGIC)
    w.u32(PRESET_VERSION)
    w.string(preset.style_id)
    w.u64(preset.seed)
    w.u32(preset.source_size[0])
    w.u32(preset.source_size[1])
    w.f32(preset.recommended.lambda_s)
    w.f32(preset.recommended.lambda_d)
    w.u32(preset.features.ndim)
    for d in preset.features.shape:
        w.u32(d)
    raw = _tensor_bytes(preset.features)
    w.u64(len(raw))
    w.raw(raw)
    _atomic_write(path, bytes(w.buf))


def load_preset(path: str) -> Preset:
    with open(path, "rb") as f:
        r = _Reader(f.read(), os.path.basename(path))
    _check_magic(r, PRESET_MAGIC)
    _check_version(r, PRESET_VERSION)
    style_id = r.string()
    seed = r.u64()
    source = (r.u32(), r.u32())
    cfg = FusionConfig(lambda_s=r.f32(), lambda_d=r.f32())
    shape = _read_dims(r)
    if len(shape) != 4 or shape[0] != 1:
        raise ShapeMismatchError(f"{r.label}: feature tensor must be (1, c, h, w), got {shape}")
    if shape[2] * 4 != source[0] or shape[3] * 4 != source[1]:
        raise ShapeMismatchError(
            f"{r.label}: feature plane {shape[2]}x{shape[3]} does not match "
            f"source noise {source[0]}x{source[1]} at 4x downsample"
        )
    features = _read_payload(r, shape)
    r.expect_done()
    if not np.all(np.isfinite(features)):
        raise FileFormatError(f"{r.label}: non-finite feature values")
    return Preset(
        features=features,
        style_id=style_id,
        seed=seed,
        source_size=source,
        recommended=cfg,
    )


# --- bare tensor files ------------------------------------------------------


def save_tensor(arr: np.ndarray, path: str) -> None:
    arr = np.asarray(arr, dtype=np.float32)
    w = _Writer()
    w.raw(TENSOR_MAGIC)
    w.u32(TENSOR_VERSION)
    w.u32(arr.ndim)
    for d in arr.shape:
        w.u32(d)
    raw = _tensor_bytes(arr)
    w.u64(len(raw))
    w.raw(raw)
    _atomic_write(path, bytes(w.buf))


def load_tensor(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        r = _Reader(f.read(), os.path.basename(path))
    _check_magic(r, TENSOR_MAGIC)
    _check_version(r, TENSOR_VERSION)
    shape = _read_dims(r)
    arr = _read_payload(r, shape)
    r.expect_done()
    return arr
