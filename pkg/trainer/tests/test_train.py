import math

import pytest
import torch

from tfp_trainer import LossWeights, TrainConfig, train
from tfp_trainer.data import ContentDataset, StyleSource


def tiny_cfg(data_dir, out_dir, **overrides):
    base = dict(
        content_dir=str(data_dir / "content"),
        style_image=str(data_dir / "style.png"),
        out_dir=str(out_dir),
        steps=2,
        batch_size=2,
        crop=32,
        content_resize=48,
        noise_size=32,
        seed=11,
        log_every=1,
        checkpoint_every=100,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestData:
    def test_content_batches_are_crops(self, data_dir):
        ds = ContentDataset(str(data_dir / "content"), resize=48, crop=32)
        gen = torch.Generator().manual_seed(0)
        batch = ds.sample_batch(3, gen)
        assert batch.shape == (3, 3, 32, 32)
        assert float(batch.min()) >= 0.0 and float(batch.max()) <= 1.0

    def test_style_batches_come_from_one_image(self, data_dir):
        style = StyleSource(str(data_dir / "style.png"), crop=32)
        gen = torch.Generator().manual_seed(0)
        batch = style.sample_batch(4, gen)
        assert batch.shape == (4, 3, 32, 32)

    def test_missing_dir_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ContentDataset(str(tmp_path), resize=48, crop=32)

    def test_seeded_sampling_reproducible(self, data_dir):
        ds = ContentDataset(str(data_dir / "content"), resize=48, crop=32)
        a = ds.sample_batch(2, torch.Generator().manual_seed(5))
        b = ds.sample_batch(2, torch.Generator().manual_seed(5))
        assert torch.equal(a, b)


class TestTrainLoop:
    def test_fixed_seed_reproduces_step_one_loss(self, data_dir, tmp_path):
        r1 = train(tiny_cfg(data_dir, tmp_path / "a", steps=1), LossWeights(),
                   pretrained_vgg=False, quiet=True)
        r2 = train(tiny_cfg(data_dir, tmp_path / "b", steps=1), LossWeights(),
                   pretrained_vgg=False, quiet=True)
        assert r1.history[0]["full"] == r2.history[0]["full"]

    def test_history_records_every_term(self, data_dir, tmp_path):
        res = train(tiny_cfg(data_dir, tmp_path / "h"), LossWeights(),
                    pretrained_vgg=False, quiet=True)
        assert len(res.history) == 2
        for record in res.history:
            for key in ("full", "d_loss", "branch_content", "branch_style",
                        "adversarial", "masked_tv", "decoder_consistency",
                        "semantic_texture_fusion"):
                assert math.isfinite(record[key])

    def test_checkpoint_written_at_end(self, data_dir, tmp_path):
        res = train(tiny_cfg(data_dir, tmp_path / "c"), LossWeights(),
                    pretrained_vgg=False, quiet=True)
        assert len(res.checkpoints) == 1
        state = torch.load(res.checkpoints[0], weights_only=True)
        assert "net" in state and "disc" in state

    def test_nan_loss_aborts_with_diagnostic(self, data_dir, tmp_path, monkeypatch):
        import tfp_trainer.loop as loop_mod

        monkeypatch.setattr(
            loop_mod, "mtv_loss", lambda *a, **k: torch.tensor(float("nan"))
        )
        with pytest.raises(RuntimeError, match="non-finite loss at step 1"):
            train(tiny_cfg(data_dir, tmp_path / "n"), LossWeights(),
                  pretrained_vgg=False, quiet=True)

    def test_bad_config_rejected(self, data_dir, tmp_path):
        with pytest.raises(ValueError):
            tiny_cfg(data_dir, tmp_path, crop=30)
        with pytest.raises(ValueError):
            tiny_cfg(data_dir, tmp_path, steps=0)
