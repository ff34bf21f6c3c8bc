import numpy as np
import pytest

from diffusion_sr.images import (
    load_png,
    luma,
    save_png,
    to_file_range,
    to_model_range,
    validate_image,
)


class TestRanges:
    def test_round_trip(self):
        img = np.random.default_rng(0).uniform(0, 1, (8, 8, 3))
        np.testing.assert_allclose(to_file_range(to_model_range(img)), img, atol=1e-12)

    def test_model_range_endpoints(self):
        assert to_model_range(np.array([[[0.0]]]))[0, 0, 0] == -1.0
        assert to_model_range(np.array([[[1.0]]]))[0, 0, 0] == 1.0

    def test_file_range_clips(self):
        out = to_file_range(np.array([[[-3.0, 3.0, 0.0]]]))
        np.testing.assert_array_equal(out[0, 0], [0.0, 1.0, 0.5])


class TestValidate:
    def test_accepts_2d_and_3d(self):
        assert validate_image(np.zeros((4, 4))).shape == (4, 4, 1)
        assert validate_image(np.zeros((4, 4, 3))).shape == (4, 4, 3)

    def test_rejects_nan_and_bad_rank(self):
        with pytest.raises(ValueError, match="NaN"):
            validate_image(np.full((2, 2, 1), np.nan))
        with pytest.raises(ValueError, match="shape"):
            validate_image(np.zeros((2, 2, 2, 2)))


class TestLuma:
    def test_rec601_weights(self):
        img = np.zeros((1, 1, 3))
        img[0, 0] = [1.0, 0.0, 0.0]
        assert luma(img)[0, 0] == pytest.approx(0.299)
        img[0, 0] = [0.0, 1.0, 0.0]
        assert luma(img)[0, 0] == pytest.approx(0.587)

    def test_gray_passthrough(self):
        img = np.random.default_rng(1).uniform(0, 1, (4, 4))
        np.testing.assert_array_equal(luma(img), img)


class TestPngIo:
    def test_8bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        img = np.round(rng.uniform(0, 1, (16, 12, 3)) * 255) / 255
        path = tmp_path / "x.png"
        save_png(path, img, bit_depth=8)
        back = load_png(path)
        np.testing.assert_allclose(back, img, atol=1e-12)

    def test_16bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        img = np.round(rng.uniform(0, 1, (9, 9, 3)) * 65535) / 65535
        path = tmp_path / "x16.png"
        save_png(path, img, bit_depth=16)
        back = load_png(path)
        np.testing.assert_allclose(back, img, atol=1e-12)

    def test_grayscale_round_trip(self, tmp_path):
        img = np.linspace(0, 1, 64).reshape(8, 8, 1)
        img = np.round(img * 255) / 255
        path = tmp_path / "g.png"
        save_png(path, img, bit_depth=8)
        back = load_png(path)
        np.testing.assert_allclose(back, img, atol=1e-12)

    def test_quantization_error_bounded(self, tmp_path):
        img = np.random.default_rng(4).uniform(0, 1, (8, 8, 3))
        path = tmp_path / "q.png"
        save_png(path, img, bit_depth=8)
        assert np.max(np.abs(load_png(path) - img)) <= 0.5 / 255 + 1e-12

    def test_missing_file(self, tmp_path):
        with pytest.raises(IOError):
            load_png(tmp_path / "absent.png")

    def test_bad_bit_depth(self, tmp_path):
        with pytest.raises(ValueError):
            save_png(tmp_path / "x.png", np.zeros((4, 4, 3)), bit_depth=12)
