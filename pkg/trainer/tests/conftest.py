import numpy as np
import pytest
import torch
from PIL import Image

from tfp_trainer import FeatureExtractor


@pytest.fixture(scope="session")
def extractor():
    return FeatureExtractor(pretrained=False, fallback_seed=0)


@pytest.fixture(scope="session")
def extractor64():
    return FeatureExtractor(pretrained=False, fallback_seed=0).double()


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Eight structured content images and one repetitive-texture style."""
    root = tmp_path_factory.mktemp("data")
    content = root / "content"
    content.mkdir()
    rng = np.random.default_rng(0)
    yy, xx = np.meshgrid(np.linspace(0, 1, 96), np.linspace(0, 1, 96), indexing="ij")
    for i in range(8):
        img = np.stack(
            [
                0.5 + 0.4 * np.sin(4 * np.pi * (yy + 0.1 * i)),
                0.5 + 0.4 * np.cos(3 * np.pi * (xx - 0.07 * i)),
                np.clip(yy * xx + 0.05 * rng.standard_normal((96, 96)), 0, 1),
            ],
            axis=-1,
        )
        Image.fromarray((np.clip(img, 0, 1) * 255).astype(np.uint8)).save(
            content / f"c{i}.png"
        )
    sy, sx = np.meshgrid(np.linspace(0, 1, 128), np.linspace(0, 1, 128), indexing="ij")
    sty = np.stack(
        [
            0.5 + 0.5 * np.sign(np.sin(16 * np.pi * sx) * np.sin(16 * np.pi * sy)),
            0.3 + 0.4 * (np.sin(24 * np.pi * (sx + sy)) > 0),
            0.6 - 0.3 * (np.sin(20 * np.pi * (sx - sy)) > 0),
        ],
        axis=-1,
    )
    Image.fromarray((np.clip(sty, 0, 1) * 255).astype(np.uint8)).save(root / "style.png")
    return root


@pytest.fixture
def torch_seed():
    torch.manual_seed(7)
    yield
