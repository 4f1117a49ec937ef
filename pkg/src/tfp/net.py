"""The texture-transfer network: a shallow encoder/decoder pair for color
and detail, a deep encoder/fusion-decoder pair for texture, and a gating
module applied to shallow features before fusion.

Forward pipeline over a content image C and a noise image N:

    f_s       = enc_shallow(C)                      shallow features
    f_d_noise = enc_deep(N)                         deep texture features
    f_d_cont  = enc_deep(C)
    color     = dec_shallow(f_s)
    tex_noise = dec_fusion(f_s, f_d_noise, cfg)     = Dec_f(ls*gate(f_s) + ld*f_d)
    tex_cont  = dec_fusion(f_s, f_d_cont, cfg)

Both encoders downsample by exactly 4x and emit the same channel count so
the fusion sum is well-defined; both decoders restore the input size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    ConvParams,
    DwSepParams,
    FusionConfig,
    ShapeError,
    conv2d,
    dw_separable,
    fuse,
    instance_norm,
    relu,
    sigmoid,
    tanh_out,
    upsample_nearest,
)
from .noise import normal_stream

__all__ = [
    "ArchError",
    "ArchSpec",
    "FlopReport",
    "LayerFlops",
    "LayerSpec",
    "Network",
    "PARAM_BUDGETS",
    "PipelineOutputs",
    "SUBNET_NAMES",
    "build",
    "count_flops",
    "count_params",
    "dae",
    "dec_fusion",
    "dec_shallow",
    "decode_texture",
    "default_spec",
    "enc_deep",
    "enc_shallow",
    "forward_full",
    "param_shapes",
]

SUBNET_NAMES = ("enc_s", "dec_s", "enc_d", "dec_f", "dae")
ACTIVATIONS = ("none", "relu", "tanh01")
KINDS = ("conv", "dwsep")

# Hard parameter ceilings per shipped variant (trainable scalars across the
# inference-path subnets, affine norm parameters included).
PARAM_BUDGETS = {"TFP": 10_500, "TFP-L": 7_300}


class ArchError(ValueError):
    """Raised when an architecture description violates its invariants."""


@dataclass(frozen=True)
class LayerSpec:
    """One stage: optional nearest upsample, then conv or depthwise-separable
    conv (same-padding k//2), then optional instance norm, then activation."""

    kind: str
    cin: int
    cout: int
    k: int = 3
    stride: int = 1
    upsample: int = 1
    norm: bool = True
    act: str = "relu"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArchError(f"unknown layer kind {self.kind!r}")
        if self.act not in ACTIVATIONS:
            raise ArchError(f"unknown activation {self.act!r}")
        if self.k < 1 or self.k % 2 == 0:
            raise ArchError(f"kernel size must be odd and positive, got {self.k}")
        if min(self.cin, self.cout, self.stride, self.upsample) < 1:
            raise ArchError(f"bad layer geometry: {self}")

    @property
    def padding(self) -> int:
        return self.k // 2

    def param_count(self) -> int:
        n = 0
        if self.kind == "conv":
            n += self.cout * self.cin * self.k * self.k + self.cout
        else:
            n += self.cin * self.k * self.k + self.cin
            n += self.cin * self.cout + self.cout
        if self.norm:
            n += 2 * self.cout
        return n


@dataclass(frozen=True)
class ArchSpec:
    """Layer lists for the four subnets plus the shallow-feature gate."""

    variant: str
    enc_s: tuple[LayerSpec, ...]
    dec_s: tuple[LayerSpec, ...]
    enc_d: tuple[LayerSpec, ...]
    dec_f: tuple[LayerSpec, ...]
    dae: LayerSpec
    downsample: int = 4

    def subnet(self, name: str) -> tuple[LayerSpec, ...]:
        if name == "dae":
            return (self.dae,)
        if name not in SUBNET_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    @property
    def feature_channels(self) -> int:
        return self.enc_s[-1].cout


def default_spec(variant: str = "TFP") -> ArchSpec:
    """Shipped architectures. TFP uses 20 feature channels, TFP-L 16; both
    downsample 4x with a conv stem and depthwise-separable middles.

    The decoders keep their full-resolution stages thin (a 4-channel
    depthwise-separable layer and a 1x1 output conv): wide kernels at full
    resolution are memory-bound on CPU and would dominate both the preset
    and the full path, washing out the speedup from skipping the deep
    encoder.
    """
    if variant == "TFP":
        mid = 20
    elif variant == "TFP-L":
        mid = 16
    else:
        raise ArchError(f"unknown variant {variant!r} (expected 'TFP' or 'TFP-L')")
    stem = 8
    enc_s = (
        LayerSpec("conv", 3, stem, stride=2),
        LayerSpec("dwsep", stem, mid, stride=2),
        LayerSpec("dwsep", mid, mid),
    )
    dec = (
        LayerSpec("dwsep", mid, mid),
        LayerSpec("dwsep", mid, 4, upsample=2),
        LayerSpec("dwsep", 4, 4, upsample=2),
        LayerSpec("conv", 4, 3, k=1, norm=False, act="tanh01"),
    )
    enc_d = (
        LayerSpec("conv", 3, stem, stride=2),
        LayerSpec("dwsep", stem, mid, stride=2),
        LayerSpec("dwsep", mid, mid),
        LayerSpec("dwsep", mid, mid),
        LayerSpec("dwsep", mid, mid),
        LayerSpec("conv", mid, mid),
    )
    gate = LayerSpec("conv", mid, mid, k=1, norm=False, act="none")
    return ArchSpec(variant=variant, enc_s=enc_s, dec_s=dec, enc_d=enc_d, dec_f=dec, dae=gate)


def _check_chain(name: str, layers: tuple[LayerSpec, ...]) -> None:
    if not layers:
        raise ArchError(f"{name} has no layers")
    for prev, cur in zip(layers, layers[1:]):
        if prev.cout != cur.cin:
            raise ArchError(
                f"{name}: layer expects {cur.cin} channels but receives {prev.cout}"
            )
    if not any(l.kind == "dwsep" for l in layers):
        raise ArchError(f"{name} must contain at least one depthwise-separable layer")


def validate_spec(spec: ArchSpec) -> None:
    """Reject specs that break the structural contract: conv stems/output
    layers, exact 4x downsample/upsample symmetry, matched fusion channels,
    and the per-variant parameter budget."""
    cfeat = spec.feature_channels
    for name in ("enc_s", "enc_d"):
        layers = spec.subnet(name)
        _check_chain(name, layers)
        if layers[0].kind != "conv":
            raise ArchError(f"{name} must start with a standard conv stem")
        if layers[0].cin != 3:
            raise ArchError(f"{name} must take 3-channel images, got {layers[0].cin}")
        factor = 1
        for l in layers:
            if l.upsample != 1:
                raise ArchError(f"{name} must not upsample")
            factor *= l.stride
        if factor != spec.downsample:
            raise ArchError(
                f"{name} downsamples by {factor}, expected exactly {spec.downsample}"
            )
        if layers[-1].cout != cfeat:
            raise ArchError(
                f"{name} emits {layers[-1].cout} channels but fusion needs {cfeat}"
            )
    for name in ("dec_s", "dec_f"):
        layers = spec.subnet(name)
        _check_chain(name, layers)
        if layers[-1].kind != "conv":
            raise ArchError(f"{name} must end with a standard conv output layer")
        if layers[-1].cout != 3:
            raise ArchError(f"{name} must emit 3-channel images, got {layers[-1].cout}")
        if layers[-1].act != "tanh01" or layers[-1].norm:
            raise ArchError(f"{name} output layer must be un-normalized tanh01")
        if layers[0].cin != cfeat:
            raise ArchError(f"{name} must consume {cfeat} feature channels")
        factor = 1
        for l in layers:
            if l.stride != 1:
                raise ArchError(f"{name} must not stride")
            factor *= l.upsample
        if factor != spec.downsample:
            raise ArchError(
                f"{name} upsamples by {factor}, expected exactly {spec.downsample}"
            )
    g = spec.dae
    if g.kind != "conv" or g.k != 1 or g.cin != cfeat or g.cout != cfeat or g.norm:
        raise ArchError("gate must be a bare 1x1 conv over the fusion channels")
    budget = PARAM_BUDGETS.get(spec.variant)
    if budget is not None:
        total = count_params(spec)
        if total > budget:
            raise ArchError(
                f"{spec.variant} has {total} parameters, over the {budget} budget"
            )


def param_shapes(spec: ArchSpec) -> dict[str, tuple[int, ...]]:
    """Ordered parameter directory: name -> shape. Fixed layout, shared by
    the initializer and the weight-file codec."""
    shapes: dict[str, tuple[int, ...]] = {}
    for name in SUBNET_NAMES:
        for i, l in enumerate(spec.subnet(name)):
            p = f"{name}.{i}"
            if l.kind == "conv":
                shapes[f"{p}.weight"] = (l.cout, l.cin, l.k, l.k)
                shapes[f"{p}.bias"] = (l.cout,)
            else:
                shapes[f"{p}.dw_weight"] = (l.cin, 1, l.k, l.k)
                shapes[f"{p}.dw_bias"] = (l.cin,)
                shapes[f"{p}.pw_weight"] = (l.cout, l.cin, 1, 1)
                shapes[f"{p}.pw_bias"] = (l.cout,)
            if l.norm:
                shapes[f"{p}.gamma"] = (l.cout,)
                shapes[f"{p}.beta"] = (l.cout,)
    return shapes


@dataclass(frozen=True)
class Network:
    spec: ArchSpec
    params: dict[str, np.ndarray] = field(repr=False)

    @property
    def variant(self) -> str:
        return self.spec.variant


def count_params(obj: ArchSpec | Network) -> int:
    """Trainable scalars over the inference-path subnets."""
    spec = obj.spec if isinstance(obj, Network) else obj
    return sum(int(np.prod(s)) for s in param_shapes(spec).values())


def build(spec: ArchSpec, seed: int = 0, params: dict[str, np.ndarray] | None = None) -> Network:
    """Validate the spec and assemble a Network, either from the given
    parameter dict or from a seed-reproducible He-style random init."""
    validate_spec(spec)
    shapes = param_shapes(spec)
    if params is not None:
        got, want = set(params), set(shapes)
        if got != want:
            missing, extra = sorted(want - got), sorted(got - want)
            raise ShapeError(f"parameter set mismatch: missing {missing}, extra {extra}")
        out = {}
        for name, shape in shapes.items():
            arr = np.asarray(params[name], dtype=np.float32)
            if arr.shape != shape:
                raise ShapeError(f"{name}: expected shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")
            out[name] = arr
        return Network(spec=spec, params=out)

    tanh_weights = {
        f"{name}.{i}.weight"
        for name in SUBNET_NAMES
        for i, l in enumerate(spec.subnet(name))
        if l.act == "tanh01"
    }
    n_random = sum(
        int(np.prod(shape)) for name, shape in shapes.items() if name.endswith("weight")
    )
    stream = normal_stream(seed, n_random)
    cursor = 0
    out = {}
    for name, shape in shapes.items():
        if name.endswith("gamma"):
            out[name] = np.ones(shape, dtype=np.float32)
        elif name.endswith(("bias", "beta")):
            out[name] = np.zeros(shape, dtype=np.float32)
        else:
            size = int(np.prod(shape))
            draw = stream[cursor : cursor + size].reshape(shape)
            cursor += size
            fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
            gain = 1.0 if (name in tanh_weights or name.startswith("dae")) else 2.0
            out[name] = (draw * np.float32(np.sqrt(gain / fan_in))).astype(np.float32)
    return Network(spec=spec, params=out)


def _layer_forward(net: Network, subnet: str, index: int, x: np.ndarray) -> np.ndarray:
    l = net.spec.subnet(subnet)[index]
    p = net.params
    key = f"{subnet}.{index}"
    if l.upsample > 1:
        x = upsample_nearest(x, l.upsample)
    if l.kind == "conv":
        x = conv2d(x, ConvParams(p[f"{key}.weight"], p[f"{key}.bias"], l.stride, l.padding))
    else:
        x = dw_separable(
            x,
            DwSepParams(
                p[f"{key}.dw_weight"],
                p[f"{key}.dw_bias"],
                p[f"{key}.pw_weight"],
                p[f"{key}.pw_bias"],
                l.stride,
                l.padding,
            ),
        )
    if l.norm:
        x = instance_norm(x, p[f"{key}.gamma"], p[f"{key}.beta"])
    if l.act == "relu":
        x = relu(x)
    elif l.act == "tanh01":
        x = np.float32(0.5) * (tanh_out(x) + np.float32(1))
    return x


def _run_subnet(net: Network, name: str, x: np.ndarray) -> np.ndarray:
    for i in range(len(net.spec.subnet(name))):
        x = _layer_forward(net, name, i, x)
    return x


def _check_image(x: np.ndarray, what: str, downsample: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"{what} must be (n, 3, h, w), got {x.shape}")
    h, w = x.shape[2], x.shape[3]
    if h % downsample or w % downsample:
        raise ShapeError(
            f"{what} dims {h}x{w} must be multiples of {downsample}; "
            f"pad the image first (the CLI pads reflectively and crops after)"
        )
    return x


def enc_shallow(net: Network, image: np.ndarray) -> np.ndarray:
    """Shallow color/detail features, spatially downsampled 4x."""
    return _run_subnet(net, "enc_s", _check_image(image, "content image", net.spec.downsample))


def enc_deep(net: Network, image: np.ndarray) -> np.ndarray:
    """Deep texture features (from noise or content), downsampled 4x."""
    return _run_subnet(net, "enc_d", _check_image(image, "deep-branch image", net.spec.downsample))


def dae(net: Network, f: np.ndarray) -> np.ndarray:
    """Detail gate on shallow features: f * sigmoid(conv1x1(f))."""
    z = _layer_forward(net, "dae", 0, f)
    return np.asarray(f, dtype=np.float32) * sigmoid(z)


def dec_shallow(net: Network, f_s: np.ndarray) -> np.ndarray:
    """Decode shallow features to a [0,1] image, restoring size 4x."""
    return _run_subnet(net, "dec_s", f_s)


def dec_fusion(
    net: Network, f_s: np.ndarray, f_d: np.ndarray, cfg: FusionConfig
) -> np.ndarray:
    """Decode the blend lambda_s*gate(f_s) + lambda_d*f_d to a [0,1] image."""
    f_s = np.asarray(f_s, dtype=np.float32)
    f_d = np.asarray(f_d, dtype=np.float32)
    if f_s.shape != f_d.shape:
        raise ShapeError(
            f"fusion features must match, got shallow {f_s.shape} vs deep {f_d.shape}"
        )
    return _run_subnet(net, "dec_f", fuse(dae(net, f_s), f_d, cfg))


def decode_texture(net: Network, f_d: np.ndarray, lambda_d: float = 1.0) -> np.ndarray:
    """Decode a deep texture feature map alone (shallow strength zero)."""
    return _run_subnet(net, "dec_f", np.float32(lambda_d) * np.asarray(f_d, dtype=np.float32))


@dataclass(frozen=True)
class PipelineOutputs:
    color: np.ndarray
    texture_from_noise: np.ndarray
    texture_from_content: np.ndarray


def forward_full(
    net: Network, content: np.ndarray, noise: np.ndarray, cfg: FusionConfig
) -> PipelineOutputs:
    """Run the whole pipeline once, reusing the shallow features for all
    three outputs."""
    f_s = enc_shallow(net, content)
    return PipelineOutputs(
        color=dec_shallow(net, f_s),
        texture_from_noise=dec_fusion(net, f_s, enc_deep(net, noise), cfg),
        texture_from_content=dec_fusion(net, f_s, enc_deep(net, content), cfg),
    )


@dataclass(frozen=True)
class LayerFlops:
    subnet: str
    index: int
    kind: str
    macs: int


@dataclass(frozen=True)
class FlopReport:
    """Multiply-add accounting per layer for one input size.

    The full path covers enc_s + gate + enc_d + dec_f (texture transfer with
    the deep features encoded on the fly); the preset path drops enc_d
    entirely and is otherwise identical. FLOPs = 2 * MACs; norm/activation
    and upsampling are not counted.
    """

    input_h: int
    input_w: int
    path: str
    layers: tuple[LayerFlops, ...]

    @property
    def subnet_totals(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for l in self.layers:
            totals[l.subnet] = totals.get(l.subnet, 0) + l.macs
        return totals

    @property
    def total_macs(self) -> int:
        return sum(l.macs for l in self.layers)

    @property
    def total_flops(self) -> int:
        return 2 * self.total_macs


def _subnet_flops(spec: ArchSpec, name: str, h: int, w: int) -> list[LayerFlops]:
    out = []
    for i, l in enumerate(spec.subnet(name)):
        h, w = h * l.upsample, w * l.upsample
        ho, wo = (
            (h + 2 * l.padding - l.k) // l.stride + 1,
            (w + 2 * l.padding - l.k) // l.stride + 1,
        )
        if l.kind == "conv":
            macs = l.cout * l.cin * l.k * l.k * ho * wo
        else:
            macs = (l.cin * l.k * l.k + l.cin * l.cout) * ho * wo
        out.append(LayerFlops(name, i, l.kind, macs))
        h, w = ho, wo
    return out


def count_flops(obj: ArchSpec | Network, h: int, w: int, path: str = "full") -> FlopReport:
    """Per-layer multiply-add counts for one image of size h x w."""
    spec = obj.spec if isinstance(obj, Network) else obj
    if path not in ("full", "preset"):
        raise ValueError(f"path must be 'full' or 'preset', got {path!r}")
    if h % spec.downsample or w % spec.downsample:
        raise ShapeError(f"size {h}x{w} must be multiples of {spec.downsample}")
    hf, wf = h // spec.downsample, w // spec.downsample
    layers = _subnet_flops(spec, "enc_s", h, w)
    layers += _subnet_flops(spec, "dae", hf, wf)
    if path == "full":
        layers += _subnet_flops(spec, "enc_d", h, w)
    layers += _subnet_flops(spec, "dec_f", hf, wf)
    return FlopReport(input_h=h, input_w=w, path=path, layers=tuple(layers))
