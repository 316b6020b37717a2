import numpy as np
import pytest

from fieldnet import preprocess, unscale


def field_with_observed(values_at, shape=(1, 4, 4)):
    """Field of zeros except listed (k, i, j) -> complex entries."""
    values = np.zeros(shape, dtype=np.complex128)
    mask = np.zeros(shape[1:], dtype=bool)
    for (k, i, j), v in values_at.items():
        values[k, i, j] = v
        mask[i, j] = True
    return values, mask


class TestScaling:
    def test_hand_example(self):
        # observed {1+2j, -3} -> scale 3, entries {1/3+2j/3, -1}
        values, mask = field_with_observed({(0, 0, 0): 1 + 2j,
                                            (0, 1, 1): -3 + 0j})
        sample = preprocess(values, mask, "complex")
        assert sample.scales[0] == 3.0
        assert sample.inputs[0, 0, 0] == pytest.approx(1 / 3)
        assert sample.inputs[1, 0, 0] == pytest.approx(2 / 3)
        assert sample.inputs[0, 1, 1] == pytest.approx(-1.0)
        assert sample.inputs[1, 1, 1] == 0.0

    def test_observed_entries_bounded(self):
        rng = np.random.Generator(np.random.Philox(key=1))
        values = (rng.standard_normal((3, 8, 8))
                  + 1j * rng.standard_normal((3, 8, 8))) * 7.0
        mask = rng.random((8, 8)) > 0.5
        mask[0, 0] = True
        sample = preprocess(values, mask, "complex")
        observed = sample.inputs[sample.mask > 0]
        assert np.abs(observed).max() == pytest.approx(1.0)
        assert np.abs(observed).min() >= 0.0

    def test_purely_real_field(self):
        values, mask = field_with_observed({(0, 0, 0): 2.0 + 0j,
                                            (0, 2, 2): -1.0 + 0j})
        sample = preprocess(values, mask, "complex")
        np.testing.assert_array_equal(sample.inputs[1], 0.0)

    def test_scale_equivariance(self):
        # multiplying the raw field by a positive alpha leaves the scaled
        # input stack unchanged
        rng = np.random.Generator(np.random.Philox(key=2))
        values = (rng.standard_normal((2, 4, 4))
                  + 1j * rng.standard_normal((2, 4, 4)))
        mask = rng.random((4, 4)) > 0.4
        mask[0, 0] = True
        base = preprocess(values, mask, "complex")
        for alpha in (0.5, 3.0, 1e4):
            scaled = preprocess(alpha * values, mask, "complex")
            np.testing.assert_allclose(scaled.inputs, base.inputs,
                                       atol=1e-12)
            np.testing.assert_allclose(scaled.scales, alpha * base.scales,
                                       rtol=1e-12)

    def test_argmax_preserved(self):
        rng = np.random.Generator(np.random.Philox(key=3))
        values = (rng.standard_normal((1, 6, 6))
                  + 1j * rng.standard_normal((1, 6, 6)))
        mask = rng.random((6, 6)) > 0.3
        mask[0, 0] = True
        sample = preprocess(values, mask, "magnitude")
        masked_truth = np.where(mask, np.abs(values[0]), -np.inf)
        masked_scaled = np.where(mask, sample.inputs[0], -np.inf)
        assert np.argmax(masked_truth) == np.argmax(masked_scaled)

    def test_all_zero_slice_flagged(self):
        values, mask = field_with_observed({(0, 0, 0): 1.0 + 0j},
                                           shape=(2, 4, 4))
        sample = preprocess(values, mask, "complex")
        assert not sample.degenerate[0]
        assert sample.degenerate[1]
        assert sample.scales[1] == 1.0

    def test_mask_constant_across_channels(self):
        values, mask = field_with_observed({(0, 1, 2): 1j}, shape=(3, 4, 4))
        sample = preprocess(values, mask, "complex")
        assert sample.mask.shape == (6, 4, 4)
        for c in range(1, 6):
            np.testing.assert_array_equal(sample.mask[c], sample.mask[0])

    def test_magnitude_variant_range(self):
        values, mask = field_with_observed({(0, 0, 0): 3j, (0, 1, 1): -4.0})
        sample = preprocess(values, mask, "magnitude")
        assert sample.inputs.shape == (1, 4, 4)
        assert sample.scales[0] == 4.0
        assert sample.inputs[0, 0, 0] == pytest.approx(0.75)


class TestUnscale:
    def test_round_trip(self):
        rng = np.random.Generator(np.random.Philox(key=4))
        values = (rng.standard_normal((2, 4, 4))
                  + 1j * rng.standard_normal((2, 4, 4)))
        mask = np.ones((4, 4), dtype=bool)
        sample = preprocess(values, mask, "complex")
        back = unscale(sample.target, sample.scales, "complex")
        np.testing.assert_allclose(back, values, atol=1e-12)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            preprocess(np.zeros((2, 4, 4)), np.zeros((3, 3), dtype=bool))
