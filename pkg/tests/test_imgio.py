import numpy as np
import pytest

from pbfml.imaging import GrayImage, RegionSpec
from pbfml.imgio import (
    load_calibration,
    load_image,
    save_calibration,
    save_image,
)


@pytest.fixture
def random_image():
    rng = np.random.default_rng(0)
    return GrayImage(rng.uniform(0, 1, (13, 17)))


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
@pytest.mark.parametrize("bit_depth", [8, 16])
def test_save_load_roundtrip(tmp_path, random_image, suffix, bit_depth):
    path = tmp_path / f"img{suffix}"
    save_image(random_image, path, bit_depth=bit_depth)
    loaded = load_image(path)
    assert loaded.pixels.shape == random_image.pixels.shape
    # quantization error only
    assert np.abs(loaded.pixels - random_image.pixels).max() <= 0.5 / ((1 << bit_depth) - 1)


def test_sixteen_bit_preserves_quantized_values(tmp_path):
    q = np.arange(65536, dtype=np.float64).reshape(256, 256)[:16, :16] / 65535.0
    im = GrayImage(q)
    for suffix in (".png", ".pgm"):
        path = tmp_path / f"exact{suffix}"
        save_image(im, path, bit_depth=16)
        assert np.array_equal(load_image(path).pixels, q)


def test_pgm_with_comment(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    im = load_image(path)
    assert im.pixels.shape == (2, 2)
    assert im.pixels[0, 1] == 128 / 255.0


def test_pgm_rejects_wrong_magic(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
    with pytest.raises(ValueError, match="P5"):
        load_image(path)


def test_calibration_roundtrip(tmp_path):
    corr = [((0.0, 0.0), (1.0, 2.0)), ((5.0, 0.0), (6.0, 2.0)),
            ((0.0, 5.0), (1.0, 7.0)), ((5.0, 5.0), (6.0, 7.0))]
    regions = [RegionSpec("c000", (0, 0, 4, 4)), RegionSpec("c001", (4, 0, 4, 4))]
    path = tmp_path / "calib.json"
    save_calibration(corr, regions, path)
    corr2, regions2 = load_calibration(path)
    assert corr2 == corr
    assert regions2 == regions


def test_calibration_missing_keys(tmp_path):
    path = tmp_path / "calib.json"
    path.write_text("{}")
    with pytest.raises(ValueError, match="correspondences"):
        load_calibration(path)


def test_calibration_invalid_json(tmp_path):
    path = tmp_path / "calib.json"
    path.write_text("{nope")
    with pytest.raises(ValueError, match="invalid JSON"):
        load_calibration(path)
