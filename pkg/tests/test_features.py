import numpy as np
import pytest

from pbfml.features import (
    CHANNELS,
    FEATURE_NAMES,
    LayerFeatures,
    StatBlock,
    build_layer_features,
    region_stats,
)
from pbfml.imaging import GrayImage


def img(a):
    return GrayImage(np.asarray(a, dtype=np.float64))


def const(c, shape=(4, 4)):
    return img(np.full(shape, c))


class TestRegionStats:
    def test_constant_image(self):
        s = region_stats(const(0.7))
        assert s == StatBlock(0.7, 0.7, 0.7, 0.7, 0.0, 0.0)

    def test_two_by_two(self):
        s = region_stats(img([[0.0, 0.0], [1.0, 1.0]]))
        assert s.avg == 0.5
        assert s.median == 0.5
        assert s.max == 1.0
        assert s.min == 0.0
        assert s.std == 0.5
        assert s.roughness == 0.5

    def test_one_by_four(self):
        s = region_stats(img([[0.1, 0.2, 0.3, 0.4]]))
        assert s.avg == pytest.approx(0.25)
        assert s.median == pytest.approx(0.25)
        assert s.max == 0.4
        assert s.min == pytest.approx(0.1)
        assert s.std == pytest.approx(np.sqrt(0.0125))
        assert s.roughness == pytest.approx(0.1)

    def test_shift_equivariance(self):
        rng = np.random.default_rng(0)
        p = rng.uniform(0.1, 0.5, (8, 8))
        delta = 0.3
        s1 = region_stats(img(p))
        s2 = region_stats(img(p + delta))
        for name in ("avg", "median", "max", "min"):
            assert getattr(s2, name) == pytest.approx(getattr(s1, name) + delta, abs=1e-12)
        assert s2.std == pytest.approx(s1.std, abs=1e-12)
        assert s2.roughness == pytest.approx(s1.roughness, abs=1e-12)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(1)
        p = rng.uniform(0, 1, (8, 8))
        s_ = 0.4
        s1 = region_stats(img(p))
        s2 = region_stats(img(p * s_))
        assert s2.std == pytest.approx(s_ * s1.std, abs=1e-12)
        assert s2.roughness == pytest.approx(s_ * s1.roughness, abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_roughness_bounded_by_std(self, seed):
        # Jensen: mean |x - mu| <= sqrt(mean (x - mu)^2)
        rng = np.random.default_rng(seed)
        s = region_stats(img(rng.uniform(0, 1, (16, 16))))
        assert s.roughness <= s.std + 1e-12

    def test_order_invariants(self):
        rng = np.random.default_rng(3)
        s = region_stats(img(rng.uniform(0, 1, (5, 7))))
        assert s.min <= s.median <= s.max
        assert s.min <= s.avg <= s.max


class TestLayerFeatures:
    def test_feature_names_are_stable(self):
        assert len(FEATURE_NAMES) == 30
        assert FEATURE_NAMES[0] == "Tomography avg"
        assert "Polarimetry post spread AoP roughness" in FEATURE_NAMES
        assert "Polarimetry post melt DoLP std" in FEATURE_NAMES
        assert FEATURE_NAMES == tuple(
            f"{prefix} {stat}" for _, prefix in CHANNELS
            for stat in ("avg", "median", "max", "min", "std", "roughness"))

    def test_all_constant_channels(self):
        lf = build_layer_features(**{name: const(0.5) for name, _ in CHANNELS})
        vec = lf.as_vector()
        assert len(vec) == 30
        for i in range(5):
            assert vec[6 * i + 4] == 0.0  # std
            assert vec[6 * i + 5] == 0.0  # roughness

    def test_single_varying_channel(self):
        lf = build_layer_features(
            tomo=img([[0.0, 0.0], [1.0, 1.0]]),
            **{name: const(0.5) for name, _ in CHANNELS if name != "tomo"})
        assert lf.tomo == StatBlock(0.5, 0.5, 1.0, 0.0, 0.5, 0.5)

    def test_missing_channel_named(self):
        with pytest.raises(ValueError, match="pm_dolp"):
            build_layer_features(tomo=const(0.5), ps_aop=const(0.5),
                                 ps_dolp=const(0.5), pm_aop=const(0.5))

    def test_vector_roundtrip(self):
        rng = np.random.default_rng(2)
        lf = build_layer_features(**{name: img(rng.uniform(0, 1, (4, 4)))
                                     for name, _ in CHANNELS})
        again = LayerFeatures.from_vector(lf.as_vector())
        assert again == lf
        assert list(lf.as_dict()) == list(FEATURE_NAMES)
