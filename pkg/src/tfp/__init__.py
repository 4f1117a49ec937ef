"""Lightweight texture transfer with per-style preset texture feature maps.

The deep texture features for a style are encoded once from seeded
standard-normal noise and cached as a preset; at inference only the cheap
shallow branch runs per image and is fused with the cached map.
"""

from .kernels import (
    ConvParams,
    DwSepParams,
    FusionConfig,
    ShapeError,
    conv2d,
    dw_separable,
    fuse,
    get_num_threads,
    instance_norm,
    relu,
    set_num_threads,
    sigmoid,
    tanh_out,
    upsample_nearest,
)
from .net import (
    ArchError,
    ArchSpec,
    FlopReport,
    LayerSpec,
    Network,
    PARAM_BUDGETS,
    PipelineOutputs,
    build,
    count_flops,
    count_params,
    dae,
    dec_fusion,
    dec_shallow,
    decode_texture,
    default_spec,
    enc_deep,
    enc_shallow,
    forward_full,
)
from .noise import normal_stream, sample_noise
from .preset import Preset, capture_preset, fit_preset, stylize_with_preset
from .formats import (
    BadMagicError,
    FileFormatError,
    ShapeMismatchError,
    TruncatedFileError,
    VersionMismatchError,
    load_preset,
    load_tensor,
    load_weights,
    save_preset,
    save_tensor,
    save_weights,
)

__version__ = "0.1.0"
