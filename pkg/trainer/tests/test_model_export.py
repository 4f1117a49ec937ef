import shutil
import subprocess

import numpy as np
import pytest
import torch

from tfp_trainer import TextureTransferNet, sample_noise
from tfp_trainer.export import export_artifacts, read_tensor_file, write_tensor_file

ENGINE = shutil.which("tfp")


class TestModel:
    def test_param_budgets_match_engine_variants(self):
        assert TextureTransferNet("TFP").count_params() == 9870
        assert TextureTransferNet("TFP-L").count_params() == 7038

    def test_forward_shapes_and_range(self, torch_seed):
        net = TextureTransferNet("TFP")
        c = torch.rand(2, 3, 64, 64)
        n = torch.randn(2, 3, 64, 64)
        with torch.no_grad():
            outputs = net(c, n)
        for out in outputs:
            assert out.shape == (2, 3, 64, 64)
            assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0

    def test_export_tensor_names_cover_all_trainables(self):
        net = TextureTransferNet("TFP")
        exported = net.export_tensors()
        exported_total = sum(t.numel() for t in exported.values())
        model_total = sum(p.numel() for p in net.parameters())
        assert exported_total == model_total
        assert all(name.split(".")[0] in ("enc_s", "dec_s", "enc_d", "dec_f", "dae")
                   for name in exported)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            TextureTransferNet("TFP-XXL")


class TestPortableNoise:
    def test_deterministic(self):
        assert torch.equal(sample_noise(5, 64, 64), sample_noise(5, 64, 64))

    def test_statistics(self):
        x = sample_noise(7, 256, 256)
        assert abs(float(x.mean())) < 0.02
        assert abs(float(x.var()) - 1.0) < 0.03

    def test_bad_size(self):
        with pytest.raises(ValueError):
            sample_noise(0, 30, 64)


class TestTensorFile:
    def test_round_trip(self, tmp_path, torch_seed):
        arr = torch.randn(1, 3, 5, 7)
        path = tmp_path / "t.tfpt"
        write_tensor_file(arr, str(path))
        back = read_tensor_file(str(path))
        assert back.shape == (1, 3, 5, 7)
        np.testing.assert_array_equal(back, arr.numpy())


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    torch.manual_seed(3)
    net = TextureTransferNet("TFP")
    out = tmp_path_factory.mktemp("export")
    paths = export_artifacts(net, str(out), "interop", seed=9,
                             lambda_s=1.0, lambda_d=1.0, noise_size=64)
    return net, paths


@pytest.mark.skipif(ENGINE is None, reason="engine CLI not installed")
class TestEngineInterop:
    def test_weight_file_within_storage_budget(self, exported):
        import os

        _, paths = exported
        assert os.path.getsize(paths["weights"]) <= 65_536

    def test_no_discriminator_leaks_into_weight_file(self, exported):
        _, paths = exported
        raw = open(paths["weights"], "rb").read()
        assert b"disc" not in raw

    def test_engine_loads_and_stylizes_export(self, exported, tmp_path):
        _, paths = exported
        out_png = tmp_path / "out.png"
        out_tensor = tmp_path / "out.tfpt"
        proc = subprocess.run(
            [ENGINE, "stylize", "--weights", paths["weights"], "--preset", paths["preset"],
             "--content", f"{paths['fixture']}/content.png", "--out", str(out_png),
             "--out-tensor", str(out_tensor)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out_png.exists()

    def test_engine_output_matches_fixture(self, exported, tmp_path):
        _, paths = exported
        out_tensor = tmp_path / "out.tfpt"
        proc = subprocess.run(
            [ENGINE, "stylize", "--weights", paths["weights"], "--preset", paths["preset"],
             "--content", f"{paths['fixture']}/content.png",
             "--out", str(tmp_path / "o.png"), "--out-tensor", str(out_tensor)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        expected = read_tensor_file(f"{paths['fixture']}/expected_output.tfpt")
        got = read_tensor_file(str(out_tensor))
        assert float(np.abs(expected - got).mean()) <= 1e-4

    def test_engine_preset_gen_reproduces_trainer_features(self, exported, tmp_path):
        # Same seed, same weights: the engine's own noise + deep encoder must
        # agree with the trainer's to float32 precision, which pins the
        # portable noise recipe on both sides.
        net, paths = exported
        engine_preset = tmp_path / "engine.tfpp"
        proc = subprocess.run(
            [ENGINE, "preset", "gen", "--weights", paths["weights"], "--seed", "9",
             "--size", "64x64", "--style-id", "interop", "--out", str(engine_preset)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        with torch.no_grad():
            want = net.eval().enc_d(sample_noise(9, 64, 64)).numpy()

        import struct

        raw = engine_preset.read_bytes()
        off = 8
        (n,) = struct.unpack_from("<I", raw, off)
        off += 4 + n + 8 + 8 + 8
        (ndim,) = struct.unpack_from("<I", raw, off)
        off += 4
        dims = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        (nbytes,) = struct.unpack_from("<Q", raw, off)
        off += 8
        got = np.frombuffer(raw, "<f4", count=nbytes // 4, offset=off).reshape(dims)
        assert float(np.abs(got - want).mean()) < 1e-5
