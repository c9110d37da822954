import numpy as np
import pytest
from PIL import Image

from clwemark_adapter import perturb


@pytest.fixture
def image_path(tmp_path):
    rng = np.random.default_rng(0)
    img = Image.fromarray(rng.integers(0, 256, (64, 64, 3), dtype=np.uint8), "RGB")
    path = tmp_path / "in.png"
    img.save(path)
    return path


class TestPerturb:
    def test_identity_is_byte_identical(self, image_path, tmp_path):
        out = perturb(image_path, "none", 0.0, tmp_path / "out.png")
        assert out.read_bytes() == image_path.read_bytes()

    def test_jpeg_reencodes(self, tmp_path):
        # Smooth content: quality 0.95 must be lossy but mild (noise images
        # are JPEG's worst case and say nothing about typical renders).
        gx, gy = np.meshgrid(np.arange(64), np.arange(64))
        smooth = np.stack([gx * 4, gy * 4, (gx + gy) * 2], axis=-1).astype(np.uint8)
        src = tmp_path / "smooth.png"
        Image.fromarray(smooth, "RGB").save(src)
        out = perturb(src, "jpeg", 0.95, tmp_path / "out.png")
        a = np.asarray(Image.open(src), dtype=float)
        b = np.asarray(Image.open(out), dtype=float)
        assert a.shape == b.shape
        err = np.abs(a - b).mean()
        assert 0.0 < err < 5.0

    def test_jpeg_level_validated(self, image_path, tmp_path):
        with pytest.raises(ValueError, match="jpeg level"):
            perturb(image_path, "jpeg", 0.0, tmp_path / "out.png")

    def test_brightness_scales_pixels(self, image_path, tmp_path):
        out = perturb(image_path, "brightness", 0.5, tmp_path / "out.png")
        a = np.asarray(Image.open(image_path), dtype=float)
        b = np.asarray(Image.open(out), dtype=float)
        assert b.mean() == pytest.approx(0.5 * a.mean(), rel=0.05)

    def test_brightness_one_is_visually_identity(self, image_path, tmp_path):
        out = perturb(image_path, "brightness", 1.0, tmp_path / "out.png")
        a = np.asarray(Image.open(image_path))
        b = np.asarray(Image.open(out))
        np.testing.assert_array_equal(a, b)

    def test_crop_keeps_size(self, image_path, tmp_path):
        out = perturb(image_path, "crop", 0.9, tmp_path / "out.png", seed=3)
        assert Image.open(out).size == Image.open(image_path).size

    def test_crop_seed_deterministic(self, image_path, tmp_path):
        a = perturb(image_path, "crop", 0.9, tmp_path / "a.png", seed=3)
        b = perturb(image_path, "crop", 0.9, tmp_path / "b.png", seed=3)
        assert a.read_bytes() == b.read_bytes()

    def test_rotate_keeps_canvas(self, image_path, tmp_path):
        out = perturb(image_path, "rotate", 30.0, tmp_path / "out.png")
        assert Image.open(out).size == Image.open(image_path).size

    def test_unsupported_kind(self, image_path, tmp_path):
        with pytest.raises(ValueError, match="unsupported perturbation"):
            perturb(image_path, "solarize", 1.0, tmp_path / "out.png")
