import numpy as np
import pytest

from diffusion_sr.resample import (
    CUBIC_A,
    DegradeSpec,
    cubic_kernel,
    degrade,
    degraded_size,
    resample_matrix,
    resize,
    round_half_away_from_zero,
)


def reference_resize_bicubic(img, out_h, out_w):
    """Independent oracle: per-pixel double loop, explicitly coded weights."""
    img = np.asarray(img, dtype=np.float64)
    h, w, c = img.shape
    out = np.zeros((out_h, out_w, c))
    for oy in range(out_h):
        sy = (oy + 0.5) * (h / out_h) - 0.5
        by = int(np.floor(sy))
        for ox in range(out_w):
            sx = (ox + 0.5) * (w / out_w) - 0.5
            bx = int(np.floor(sx))
            acc = np.zeros(c)
            for dy in range(-1, 3):
                ty = min(max(by + dy, 0), h - 1)
                wy = cubic_kernel(np.array([sy - (by + dy)]))[0]
                for dx in range(-1, 3):
                    tx = min(max(bx + dx, 0), w - 1)
                    wx = cubic_kernel(np.array([sx - (bx + dx)]))[0]
                    acc += wy * wx * img[ty, tx]
            out[oy, ox] = acc
    return out


class TestKernel:
    def test_interpolating_at_integers(self):
        assert cubic_kernel(np.array([0.0]))[0] == 1.0
        assert cubic_kernel(np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-15)
        assert cubic_kernel(np.array([2.0]))[0] == pytest.approx(0.0, abs=1e-15)
        assert cubic_kernel(np.array([2.5]))[0] == 0.0

    def test_partition_of_unity_interior(self):
        # weights over the 4 taps sum to 1 for any fractional offset
        for frac in np.linspace(0, 1, 17):
            taps = np.array([frac + 1, frac, frac - 1, frac - 2])
            assert cubic_kernel(taps).sum() == pytest.approx(1.0, abs=1e-12)

    def test_catmull_rom_parameter(self):
        assert CUBIC_A == -0.5


class TestRounding:
    def test_half_away_from_zero(self):
        assert round_half_away_from_zero(2.5) == 3
        assert round_half_away_from_zero(3.5) == 4
        assert round_half_away_from_zero(-2.5) == -3
        assert round_half_away_from_zero(94.8148) == 95

    def test_degraded_size_examples(self):
        assert degraded_size(256, 2.7) == 95
        assert degraded_size(256, 2.0) == 128
        assert degraded_size(4, 8.0) == 1


class TestResize:
    def test_identity_same_size(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, (9, 7, 3))
        for method in ("nearest", "bicubic"):
            np.testing.assert_allclose(resize(img, 9, 7, method), img, atol=1e-12)

    def test_matches_reference_on_gradient_ramp(self):
        ramp = np.linspace(0, 1, 32)[:, None] * np.linspace(0, 1, 24)[None, :]
        img = ramp[:, :, None]
        for out_h, out_w in ((95, 95), (13, 40), (64, 48)):
            ours = resize(img, out_h, out_w, "bicubic")
            ref = reference_resize_bicubic(img, out_h, out_w)
            np.testing.assert_allclose(ours, ref, atol=1e-6)

    def test_matches_reference_on_random_image(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(-1, 1, (17, 11, 3))
        ours = resize(img, 29, 7, "bicubic")
        ref = reference_resize_bicubic(img, 29, 7)
        np.testing.assert_allclose(ours, ref, atol=1e-9)

    def test_reproduces_linear_ramp_in_interior(self):
        # cubic convolution reproduces degree-1 polynomials away from edges
        x = np.linspace(0.0, 1.0, 64)
        img = np.tile(x, (8, 1))[:, :, None]
        up = resize(img, 8, 128, "bicubic")
        src = (np.arange(128) + 0.5) * (64 / 128) - 0.5
        interior = (src > 2) & (src < 61)
        np.testing.assert_allclose(up[4, interior, 0],
                                   x[0] + (x[1] - x[0]) * src[interior], atol=1e-10)

    def test_rejects_bad_method_and_size(self):
        img = np.zeros((4, 4, 1))
        with pytest.raises(ValueError, match="method"):
            resize(img, 2, 2, "lanczos")
        with pytest.raises(ValueError, match="positive"):
            resize(img, 0, 2)

    def test_matrix_rows_sum_to_one(self):
        for n_in, n_out in ((64, 23), (23, 64), (10, 10)):
            m = resample_matrix(n_in, n_out, "bicubic")
            np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-12)


class TestDegrade:
    def test_scale_one_identity_nearest(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(0, 1, (16, 16, 3))
        spec = DegradeSpec(scale=1.0, down_method="nearest", up_method="nearest")
        np.testing.assert_array_equal(degrade(img, spec), img)

    def test_block_constant_fixed_point(self):
        rng = np.random.default_rng(2)
        blocks = rng.uniform(0, 1, (8, 8, 3))
        img = np.repeat(np.repeat(blocks, 2, axis=0), 2, axis=1)
        spec = DegradeSpec(scale=2.0, down_method="nearest", up_method="nearest")
        np.testing.assert_allclose(degrade(img, spec), img, atol=1e-12)

    def test_non_integer_scale_shape(self):
        img = np.zeros((256, 256, 1))
        out = degrade(img, DegradeSpec(scale=2.7))
        assert out.shape == (256, 256, 1)

    def test_degrade_loses_energy_on_noise(self):
        rng = np.random.default_rng(4)
        img = rng.standard_normal((64, 64, 1))
        out = degrade(img, DegradeSpec(scale=4.0))
        assert np.mean((out - img) ** 2) > 0.1

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="scale"):
            DegradeSpec(scale=0.5)
        with pytest.raises(ValueError, match="down_method"):
            DegradeSpec(scale=2.0, down_method="area")
