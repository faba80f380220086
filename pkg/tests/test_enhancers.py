import numpy as np
import pytest

from tile_ensemble.enhancers import (
    AUTO_GAIN_BOUNDS,
    Enhancer,
    EnhancerKind,
    EnhancerSpec,
    auto_gain,
    enhance,
    guided_filter,
    make_enhancer,
)
from tile_ensemble.errors import InvalidInputError, ShapeMismatchError
from tile_ensemble.image import Tile, Window, lab_to_srgb_array, srgb_to_lab_array
from tile_ensemble.synth import make_scene


def _srgb_encode(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * x ** (1 / 2.4) - 0.055)


def _lab_tile(rgb):
    return Tile(srgb_to_lab_array(rgb), Window.full())


@pytest.fixture
def textured(rng):
    return make_scene(rng, 64, 64).data


def test_identity_is_bit_exact(textured):
    tile = _lab_tile(textured)
    out = enhance(EnhancerSpec.identity(), tile)
    np.testing.assert_array_equal(out.data, tile.data)
    np.testing.assert_array_equal(enhance(EnhancerSpec.identity(), out).data, out.data)


def test_gain_gamma_degenerate_is_identity(textured):
    spec = EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=1.0, tone_gamma=None, chroma_radius=0)
    tile = _lab_tile(textured)
    out = enhance(spec, tile)
    assert np.max(np.abs(out.data - tile.data)) <= 1e-3


def test_gain_gamma_dark_constant_tile():
    # linear 0.01 * 10 = 0.1 before the tone curve, encoded 0.1 ** (1 / 2.2)
    expected = 0.1 ** (1 / 2.2)
    assert expected == pytest.approx(0.351, abs=5e-4)
    rgb = np.full((32, 32, 3), _srgb_encode(0.01))
    out = enhance(EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=10.0), _lab_tile(rgb))
    np.testing.assert_allclose(lab_to_srgb_array(out.data), expected, atol=1e-6)


def test_gain_gamma_pointwise_path_matches_scalar_oracle(rng):
    rgb = rng.uniform(0.0, 0.3, (32, 32, 3))
    spec = EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=3.0, chroma_radius=0)
    out = lab_to_srgb_array(enhance(spec, _lab_tile(rgb)).data)
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    expected = np.clip(3.0 * lin, 0, 1) ** (1 / 2.2)
    np.testing.assert_allclose(out, expected, atol=1e-6)


def test_gain_gamma_uses_gain_argument(textured):
    enh = make_enhancer(EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=1.0))
    tile = _lab_tile(0.2 * textured)
    brighter = enh(tile, gain=4.0).data[..., 0].mean()
    assert brighter > enh(tile).data[..., 0].mean()


def test_gain_gamma_smooths_chroma_only(textured):
    tile = _lab_tile(textured)
    smooth = enhance(EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=2.0), tile).data
    raw = enhance(EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=2.0, chroma_radius=0), tile).data
    np.testing.assert_array_equal(smooth[..., 0], raw[..., 0])
    assert not np.allclose(smooth[..., 1:], raw[..., 1:])


def test_gain_gamma_depends_on_tile_context(textured):
    # the same pixels inside two different crops get different chroma
    spec = EnhancerSpec(EnhancerKind.GAIN_GAMMA, gain=2.0)
    a = enhance(spec, _lab_tile(textured[:48, :48])).data
    b = enhance(spec, _lab_tile(textured[16:, 16:])).data
    assert np.abs(a[24:40, 24:40] - b[8:24, 8:24]).max() > 0


def _box_mean(x, r):
    p = np.pad(x, r, mode="symmetric")
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            out[i, j] = p[i : i + 2 * r + 1, j : j + 2 * r + 1].mean()
    return out


def test_guided_filter_matches_explicit_windows(rng):
    guide, src = rng.random((12, 15)), rng.random((12, 15))
    r, eps = 2, 0.05
    mi, mp = _box_mean(guide, r), _box_mean(src, r)
    a = (_box_mean(guide * src, r) - mi * mp) / (_box_mean(guide * guide, r) - mi * mi + eps)
    b = mp - a * mi
    expected = _box_mean(a, r) * guide + _box_mean(b, r)
    np.testing.assert_allclose(guided_filter(guide, src, r, eps), expected, atol=1e-12)


def test_guided_filter_limits(rng):
    guide = rng.random((20, 20))
    np.testing.assert_allclose(guided_filter(guide, np.full((20, 20), 0.7), 3, 0.1), 0.7, atol=1e-12)
    # src == guide with vanishing eps reproduces the guide
    np.testing.assert_allclose(guided_filter(guide, guide, 3, 1e-12), guide, atol=1e-6)


def _noisy(sigma=0.05, seed=3):
    return EnhancerSpec.noisy(EnhancerSpec.identity(), sigma, seed)


def test_noisy_wrapper_is_seeded_per_invocation():
    tile = _lab_tile(np.full((32, 32, 3), 0.5))
    enh = make_enhancer(_noisy())
    a, b, c = enh(tile, index=4).data, enh(tile, index=4).data, enh(tile, index=5).data
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    other = make_enhancer(_noisy(seed=4))(tile, index=4).data
    assert not np.array_equal(a, other)


def test_noisy_wrapper_std_in_srgb_units():
    tile = _lab_tile(np.full((128, 128, 3), 0.5))
    rgb = lab_to_srgb_array(enhance(_noisy(0.02), tile).data)
    assert rgb.std() == pytest.approx(0.02, rel=0.03)


def test_noisy_wrapper_zero_mean():
    tile = _lab_tile(np.full((32, 32, 3), 0.5))
    enh = make_enhancer(_noisy(0.05))
    base = lab_to_srgb_array(tile.data)
    n = 10_000
    total = np.zeros(base.shape)
    total_sq = np.zeros(base.shape)
    for k in range(n):
        d = lab_to_srgb_array(enh(tile, index=k).data) - base
        total += d
        total_sq += d * d
    mean = total / n
    se = np.sqrt((total_sq / n - mean**2) / n)
    # 3072 per-pixel tests: the 3-SE bound fails for ~0.27% of them by chance alone
    assert np.mean(np.abs(mean) <= 3 * se) > 0.99
    grand_se = np.sqrt(np.mean(se**2) / mean.size)
    assert abs(mean.mean()) <= 3 * grand_se


def test_noisy_zero_sigma_is_inner(textured):
    tile = _lab_tile(textured)
    out = enhance(_noisy(0.0), tile).data
    assert np.max(np.abs(lab_to_srgb_array(out) - textured)) <= 1e-9


class _Shrinks(Enhancer):
    def run(self, lab, gain, index):
        return lab[1:, 1:]


def test_shape_check():
    tile = _lab_tile(np.zeros((32, 32, 3)))
    with pytest.raises(ShapeMismatchError):
        _Shrinks(EnhancerSpec.identity())(tile)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        EnhancerSpec.identity(gain=0.0)
    with pytest.raises(InvalidInputError):
        EnhancerSpec(EnhancerKind.NOISY_WRAPPER)
    with pytest.raises(InvalidInputError):
        EnhancerSpec(EnhancerKind.EXTERNAL)
    with pytest.raises(InvalidInputError):
        EnhancerSpec.noisy(EnhancerSpec.identity(), -1.0)
    with pytest.raises(InvalidInputError):
        EnhancerSpec(EnhancerKind.GAIN_GAMMA, tone_gamma=0.0)


def test_auto_gain():
    mid = np.full((4, 4, 3), 0.5)
    lin = ((0.5 + 0.055) / 1.055) ** 2.4
    assert auto_gain(mid) == pytest.approx(0.35 / lin, rel=1e-6)
    assert auto_gain(np.zeros((4, 4, 3))) == AUTO_GAIN_BOUNDS[1]
    assert auto_gain(np.full((4, 4, 3), 1e-9)) == AUTO_GAIN_BOUNDS[1]
