import pytest
import torch

from fieldnet import ModelConfig, build_model


def tiny_config(**overrides):
    defaults = dict(variant="complex", in_channels=4, depth=2,
                    base_kernels=4, seed=0)
    defaults.update(overrides)
    return ModelConfig(**defaults)


class TestConfig:
    def test_complex_doubles_kernels(self):
        assert tiny_config(variant="magnitude").kernels == 4
        assert tiny_config(variant="complex").kernels == 8

    def test_rejects_unknown_variant(self):
        with pytest.raises(ValueError):
            ModelConfig(variant="phase")

    def test_rejects_zero_depth(self):
        with pytest.raises(ValueError):
            ModelConfig(depth=0)


class TestShapes:
    @pytest.mark.parametrize("variant,channels", [("complex", 4),
                                                  ("magnitude", 3)])
    def test_output_matches_input_shape(self, variant, channels):
        model = build_model(tiny_config(variant=variant,
                                        in_channels=channels))
        x = torch.randn(2, channels, 16, 16)
        mask = (torch.rand(2, 1, 16, 16) > 0.5).float()
        mask[:, :, 0, 0] = 1.0
        out, out_mask = model(x, mask)
        assert out.shape == x.shape
        assert out_mask.shape[-2:] == x.shape[-2:]

    def test_bottleneck_resolution(self):
        # depth 3 on a 32-wide grid bottoms out at 4x4
        model = build_model(tiny_config(depth=3))
        captured = {}
        original = model.encoder[-1].forward

        def spy(features, mask):
            out, new_mask = original(features, mask)
            captured["shape"] = out.shape[-2:]
            return out, new_mask

        model.encoder[-1].forward = spy
        x = torch.randn(1, 4, 32, 32)
        mask = torch.ones(1, 1, 32, 32)
        model(x, mask)
        assert captured["shape"] == (4, 4)

    def test_over_shrunk_grid_rejected(self):
        model = build_model(tiny_config(depth=3))
        x = torch.randn(1, 4, 4, 4)
        mask = torch.ones(1, 1, 4, 4)
        with pytest.raises(ValueError):
            model(x, mask)


class TestDeterminism:
    def test_same_seed_same_weights(self):
        a = build_model(tiny_config(seed=7))
        b = build_model(tiny_config(seed=7))
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_different_seed_different_weights(self):
        a = build_model(tiny_config(seed=1))
        b = build_model(tiny_config(seed=2))
        assert any(not torch.equal(pa, pb)
                   for pa, pb in zip(a.parameters(), b.parameters()))

    def test_biases_start_at_zero(self):
        model = build_model(tiny_config())
        for name, param in model.named_parameters():
            if name.endswith("bias"):
                assert torch.equal(param, torch.zeros_like(param))


class TestMaskPropagation:
    def test_sparse_mask_fills_in(self):
        # a handful of observations should produce a fully valid output
        # mask once the bottleneck is small enough to saturate
        model = build_model(tiny_config(depth=3))
        x = torch.randn(1, 4, 16, 16)
        mask = torch.zeros(1, 1, 16, 16)
        mask[0, 0, 3, 3] = 1.0
        mask[0, 0, 12, 9] = 1.0
        _, out_mask = model(x, mask)
        assert torch.all(out_mask > 0)

    def test_forward_is_finite(self):
        model = build_model(tiny_config())
        x = torch.randn(1, 4, 16, 16)
        mask = torch.zeros(1, 1, 16, 16)
        mask[0, 0, 8, 8] = 1.0
        out, _ = model(x, mask)
        assert torch.isfinite(out).all()
