"""Dense NCHW tensor kernels: convolution, depthwise-separable convolution,
instance norm, nearest upsampling, and the elementwise ops the network uses.

Everything here is a pure function over float32 arrays shaped
(batch, channels, height, width). Convolution uses the cross-correlation
convention (no kernel flip) with zero padding; accumulation stays in
float32.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "ConvParams",
    "DwSepParams",
    "FusionConfig",
    "ShapeError",
    "conv2d",
    "dw_separable",
    "fuse",
    "get_num_threads",
    "instance_norm",
    "relu",
    "set_num_threads",
    "sigmoid",
    "tanh_out",
    "upsample_nearest",
]


class ShapeError(ValueError):
    """Raised when tensor shapes are inconsistent with an operation."""


# Worker threads for splitting large matmuls over fixed-size row blocks.
# Block size is independent of the thread count so results do not change
# when the pool grows or shrinks.
_num_threads = 1
_ROW_BLOCK = 16384


def set_num_threads(n: int) -> None:
    global _num_threads
    _num_threads = max(1, int(n))


def get_num_threads() -> int:
    return _num_threads


def _require_nchw(x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 4:
        raise ShapeError(f"{what} must be rank-4 NCHW, got shape {x.shape}")
    return x


def _as_vec(v: np.ndarray, length: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float32).reshape(-1)
    if v.shape[0] != length:
        raise ShapeError(f"{what} must have length {length}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class ConvParams:
    """Standard convolution: weight (cout, cin, k, k), bias (cout,)."""

    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float32)
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ShapeError(f"conv weight must be (cout, cin, k, k), got {w.shape}")
        if w.shape[2] % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {w.shape[2]}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", _as_vec(self.bias, w.shape[0], "conv bias"))


@dataclass(frozen=True)
class DwSepParams:
    """Depthwise 3x3-style conv (per-channel) followed by a 1x1 pointwise mix.

    dw_weight (c, 1, k, k), dw_bias (c,), pw_weight (cout, c, 1, 1),
    pw_bias (cout,).
    """

    dw_weight: np.ndarray
    dw_bias: np.ndarray
    pw_weight: np.ndarray
    pw_bias: np.ndarray
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        dw = np.asarray(self.dw_weight, dtype=np.float32)
        pw = np.asarray(self.pw_weight, dtype=np.float32)
        if dw.ndim != 4 or dw.shape[1] != 1 or dw.shape[2] != dw.shape[3]:
            raise ShapeError(f"depthwise weight must be (c, 1, k, k), got {dw.shape}")
        if dw.shape[2] % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {dw.shape[2]}")
        if pw.ndim != 4 or pw.shape[2:] != (1, 1):
            raise ShapeError(f"pointwise weight must be (cout, c, 1, 1), got {pw.shape}")
        if pw.shape[1] != dw.shape[0]:
            raise ShapeError(
                f"pointwise expects {dw.shape[0]} input channels, got {pw.shape[1]}"
            )
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")
        object.__setattr__(self, "dw_weight", dw)
        object.__setattr__(self, "pw_weight", pw)
        object.__setattr__(self, "dw_bias", _as_vec(self.dw_bias, dw.shape[0], "dw bias"))
        object.__setattr__(self, "pw_bias", _as_vec(self.pw_bias, pw.shape[0], "pw bias"))

    @property
    def param_count(self) -> int:
        c, _, k, _ = self.dw_weight.shape
        cout = self.pw_weight.shape[0]
        return c * k * k + c + c * cout + cout


@dataclass(frozen=True)
class FusionConfig:
    """Blend strengths for the shallow (lambda_s) and deep (lambda_d) branches.

    Values are quantized to float32 on construction so configs round-trip
    bit-exactly through the preset file format.
    """

    lambda_s: float = 1.0
    lambda_d: float = 1.0

    def __post_init__(self):
        if self.lambda_s < 0 or self.lambda_d < 0:
            raise ValueError(
                f"fusion strengths must be >= 0, got ({self.lambda_s}, {self.lambda_d})"
            )
        if self.lambda_s == 0 and self.lambda_d == 0:
            raise ValueError("fusion strengths must not both be zero")
        object.__setattr__(self, "lambda_s", float(np.float32(self.lambda_s)))
        object.__setattr__(self, "lambda_d", float(np.float32(self.lambda_d)))


def _matmul_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b, optionally split over row blocks across the thread pool."""
    if _num_threads == 1 or a.shape[0] <= _ROW_BLOCK:
        return a @ b
    out = np.empty((a.shape[0], b.shape[1]), dtype=np.float32)
    spans = [(i, min(i + _ROW_BLOCK, a.shape[0])) for i in range(0, a.shape[0], _ROW_BLOCK)]

    def run(span):
        lo, hi = span
        np.matmul(a[lo:hi], b, out=out[lo:hi])

    with ThreadPoolExecutor(max_workers=_num_threads) as pool:
        list(pool.map(run, spans))
    return out


def _pad_zeros(x: np.ndarray, pad: int) -> np.ndarray:
    # np.zeros + interior copy is one pass; np.pad costs several.
    if pad == 0:
        return x
    n, c, h, w = x.shape
    out = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=np.float32)
    out[:, :, pad : pad + h, pad : pad + w] = x
    return out


def _out_hw(h: int, w: int, k: int, stride: int, pad: int) -> tuple[int, int]:
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    return ho, wo


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Direct 2-D convolution (cross-correlation), zero padding, bias per
    output channel. Output spatial dims follow floor((d + 2*pad - k)/stride) + 1.
    """
    x = _require_nchw(x, "conv input")
    n, c, h, w = x.shape
    cout, cin, k, _ = p.weight.shape
    if c != cin:
        raise ShapeError(f"conv expects {cin} input channels, got {c} (input {x.shape})")
    if h + 2 * p.padding < k or w + 2 * p.padding < k:
        raise ShapeError(
            f"spatial dims {h}x{w} with padding {p.padding} too small for kernel {k}"
        )
    ho, wo = _out_hw(h, w, k, p.stride, p.padding)
    if k == 1 and p.stride == 1:
        # Pointwise fast path: a single channel-mixing matmul, no windowing.
        return _pointwise(x, p.weight[:, :, 0, 0], p.bias)
    xp = _pad_zeros(x, p.padding)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, :: p.stride, :: p.stride]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
    flat = _matmul_rows(cols, p.weight.reshape(cout, -1).T)
    flat += p.bias
    return np.ascontiguousarray(flat.reshape(n, ho, wo, cout).transpose(0, 3, 1, 2))


_DW_BLOCK = 64  # output rows per block; keeps the k*k taps cache-resident


def _pointwise(x: np.ndarray, weight2d: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """1x1 channel mix as one GEMM per sample over the (c, h*w) view."""
    n, c, h, w = x.shape
    cout = weight2d.shape[0]
    out = np.empty((n, cout, h, w), dtype=np.float32)
    for i in range(n):
        np.matmul(weight2d, x[i].reshape(c, h * w), out=out[i].reshape(cout, h * w))
    out += bias[None, :, None, None]
    return out


def dw_separable(x: np.ndarray, p: DwSepParams) -> np.ndarray:
    """Per-channel spatial conv followed by a 1x1 pointwise conv."""
    x = _require_nchw(x, "depthwise input")
    n, c, h, w = x.shape
    if c != p.dw_weight.shape[0]:
        raise ShapeError(
            f"depthwise expects {p.dw_weight.shape[0]} channels, got {c} (input {x.shape})"
        )
    k = p.dw_weight.shape[2]
    if h + 2 * p.padding < k or w + 2 * p.padding < k:
        raise ShapeError(
            f"spatial dims {h}x{w} with padding {p.padding} too small for kernel {k}"
        )
    xp = _pad_zeros(x, p.padding)
    ho, wo = _out_hw(h, w, k, p.stride, p.padding)
    s = p.stride
    # k*k shifted multiply-adds over row blocks instead of an im2col buffer:
    # the depthwise step is bandwidth-bound, so keep each block in cache.
    acc = np.empty((n, c, ho, wo), dtype=np.float32)
    acc[:] = p.dw_bias[None, :, None, None]
    tmp = np.empty((n, c, min(_DW_BLOCK, ho), wo), dtype=np.float32)
    taps = [
        (p.dw_weight[:, 0, di, dj][None, :, None, None], di, dj)
        for di in range(k)
        for dj in range(k)
    ]
    for r0 in range(0, ho, _DW_BLOCK):
        r1 = min(r0 + _DW_BLOCK, ho)
        a = acc[:, :, r0:r1]
        t = tmp[:, :, : r1 - r0]
        for tap, di, dj in taps:
            np.multiply(
                tap,
                xp[:, :, r0 * s + di : (r1 - 1) * s + di + 1 : s, dj : dj + (wo - 1) * s + 1 : s],
                out=t,
            )
            a += t
    return _pointwise(acc, p.pw_weight[:, :, 0, 0], p.pw_bias)


def instance_norm(
    x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Standardize each (sample, channel) plane with biased variance, then
    apply the per-channel affine (gamma, beta).
    """
    x = _require_nchw(x, "norm input")
    c = x.shape[1]
    gamma = _as_vec(gamma, c, "gamma")
    beta = _as_vec(beta, c, "beta")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    mean = x.mean(axis=(2, 3), keepdims=True, dtype=np.float32)
    centered = x - mean
    var = np.mean(centered * centered, axis=(2, 3), keepdims=True, dtype=np.float32)
    y = centered / np.sqrt(var + np.float32(eps))
    return y * gamma[None, :, None, None] + beta[None, :, None, None]


def upsample_nearest(x: np.ndarray, factor: int) -> np.ndarray:
    """Replicate each pixel into a factor x factor block."""
    x = _require_nchw(x, "upsample input")
    if factor < 1:
        raise ValueError(f"upsample factor must be >= 1, got {factor}")
    if factor == 1:
        return x
    return x.repeat(factor, axis=2).repeat(factor, axis=3)


def fuse(a: np.ndarray, b: np.ndarray, cfg: FusionConfig) -> np.ndarray:
    """Weighted elementwise sum lambda_s * a + lambda_d * b."""
    a = _require_nchw(a, "fuse lhs")
    b = _require_nchw(b, "fuse rhs")
    if a.shape != b.shape:
        raise ShapeError(f"fuse requires equal shapes, got {a.shape} vs {b.shape}")
    return np.float32(cfg.lambda_s) * a + np.float32(cfg.lambda_d) * b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float32), np.float32(0))


def tanh_out(x: np.ndarray) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=np.float32))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    with np.errstate(over="ignore"):
        return np.float32(1) / (np.float32(1) + np.exp(-x))
