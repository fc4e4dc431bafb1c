import numpy as np
import pytest

from pbfml.features import LayerFeatures
from pbfml.imaging import GrayImage, Homography, RegionSpec
from pbfml.pipeline import (
    layer_features_from_channels,
    load_features_csv,
    process_channel,
    save_features_csv,
    synthetic_dataset,
)
from pbfml.synth import CHANNEL_NAMES, SynthConfig


def rand_img(shape=(16, 16), seed=0):
    return GrayImage(np.random.default_rng(seed).uniform(0.2, 0.8, shape))


class TestProcessChannel:
    def test_no_op_chain_preserves_pixels(self):
        img = rand_img()
        out = process_channel(img, {"imaging.clean_hot_pixels": False,
                                    "imaging.resample_size": 16})
        assert np.array_equal(out.pixels, img.pixels)

    def test_resamples_to_configured_size(self):
        out = process_channel(rand_img((20, 30)), {"imaging.resample_size": 16})
        assert (out.height, out.width) == (16, 16)

    def test_crop_applies_region(self):
        img = rand_img((16, 16))
        region = RegionSpec("c0", (0, 0, 8, 8))
        out = process_channel(img, {"imaging.clean_hot_pixels": False,
                                    "imaging.resample_size": 8}, region=region)
        assert np.array_equal(out.pixels, img.pixels[:8, :8])

    def test_identity_warp_is_transparent(self):
        img = rand_img()
        out = process_channel(img, {"imaging.clean_hot_pixels": False,
                                    "imaging.resample_size": 16},
                              h=Homography.identity())
        assert np.allclose(out.pixels, img.pixels, atol=1e-12)

    def test_unknown_filter_rejected(self):
        with pytest.raises(ValueError, match="imaging.filter"):
            process_channel(rand_img(), {"imaging.filter": "gaussian"})

    @pytest.mark.parametrize("filt", ["median", "wiener"])
    def test_filters_run(self, filt):
        out = process_channel(rand_img(), {"imaging.filter": filt,
                                           "imaging.resample_size": 16})
        assert (out.height, out.width) == (16, 16)


def test_layer_features_has_all_channels():
    channels = {ch: rand_img(seed=i) for i, ch in enumerate(CHANNEL_NAMES)}
    lf = layer_features_from_channels(channels, {"imaging.resample_size": 16})
    assert len(lf.as_vector()) == 30


def test_synthetic_dataset_shapes_and_truth():
    scfg = SynthConfig(n_coupons=8, layers_per_coupon=3, image_size=16, seed=1)
    ds, median, coupons, truth = synthetic_dataset(scfg, {"imaging.resample_size": 16})
    assert len(ds) == 24
    assert len(coupons) == 8
    assert ds.X.shape == (24, 35)
    assert set(truth.quality) == {c.coupon_id for c in coupons}
    assert median == pytest.approx(float(np.median(ds.power_factor)))


def test_features_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    feats = {("c000", 0): LayerFeatures.from_vector(rng.uniform(0, 1, 30)),
             ("c000", 1): LayerFeatures.from_vector(rng.uniform(0, 1, 30)),
             ("c001", 0): LayerFeatures.from_vector(rng.uniform(0, 1, 30))}
    path = tmp_path / "features.csv"
    save_features_csv(feats, path)
    again = load_features_csv(path)
    assert again == feats


def test_features_csv_missing_column(tmp_path):
    feats = {("c000", 0): LayerFeatures.from_vector(np.full(30, 0.5))}
    path = tmp_path / "features.csv"
    save_features_csv(feats, path)
    lines = path.read_text().splitlines()
    cols = lines[0].split(",")
    drop = cols.index("Tomography avg")
    trimmed = [",".join(c for i, c in enumerate(line.split(",")) if i != drop)
               for line in lines]
    path.write_text("\n".join(trimmed) + "\n")
    with pytest.raises(ValueError, match="Tomography avg"):
        load_features_csv(path)
