"""Training sidecar for the tfp texture-transfer engine: learns the network
on content images plus one style image and exports engine-loadable weight,
preset, and parity-fixture files.
"""

from .config import LossWeights, TrainConfig
from .export import export_artifacts, read_tensor_file, write_preset_file, write_weight_file
from .losses import (
    LossTerms,
    adv_losses,
    branch_content_loss,
    branch_style_loss,
    edge_mask,
    fdc_loss,
    gram,
    mtv_loss,
    stf_loss,
    total_loss,
)
from .model import PatchDiscriminator, TextureTransferNet
from .noise import sample_noise
from .perceptual import FeatureExtractor
from .loop import TrainResult, train

__version__ = "0.1.0"
