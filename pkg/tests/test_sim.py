import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from tile_ensemble.errors import InvalidInputError
from tile_ensemble.image import ColorSpace, Image
from tile_ensemble.io import read_png
from tile_ensemble.sim import (
    Crf,
    CrfKind,
    SimConfig,
    add_shot_read_noise,
    apply_crf,
    darken,
    generate_dataset,
    invert_crf,
    item_rng,
    mean_luminance,
    quantize,
    quantize_array,
    sample_crf,
    simulate_pair,
)
from tile_ensemble.synth import make_scene, write_corpus

IDENTITY_CFG = SimConfig(
    gamma_range=(1.0, 1.0),
    darken_range=(1.0, 1.0),
    shot_sigma_range=(0.0, 0.0),
    read_sigma_range=(0.0, 0.0),
    crf_kinds=("gamma",),
)


def _lin(data):
    return Image(np.asarray(data, dtype=float), ColorSpace.LINEAR_RGB)


def test_gamma_two_is_square_root():
    crf = Crf(CrfKind.GAMMA, 2.0)
    assert crf.encode(0.25) == pytest.approx(0.5, abs=1e-15)
    assert crf.decode(crf.encode(0.25)) == pytest.approx(0.25, abs=1e-6)


def test_sampled_crfs_are_valid():
    rng = np.random.default_rng(5)
    grid = np.linspace(0, 1, 1024)
    for _ in range(200):
        crf = sample_crf(rng)
        assert crf.encode(0.0) == 0.0
        assert crf.encode(1.0) == pytest.approx(1.0, abs=1e-12)
        ys = crf.encode(grid)
        assert all(ys[i] < ys[i + 1] for i in range(len(grid) - 1))


def test_non_monotone_crf_rejected():
    with pytest.raises(InvalidInputError):
        Crf(CrfKind.SIGMOID_POLY, 2.0, 1.5)
    with pytest.raises(InvalidInputError):
        Crf(CrfKind.GAMMA, -1.0)


def test_gamma_one_is_identity(rng):
    x = rng.random((8, 8, 3))
    np.testing.assert_array_equal(apply_crf(_lin(x), Crf(CrfKind.GAMMA, 1.0)).data, x)


def test_random_crf_round_trip():
    rng = np.random.default_rng(11)
    x = rng.random(100_000)
    for _ in range(10):
        crf = sample_crf(rng)
        back = invert_crf(apply_crf(x, crf), crf)
        assert np.max(np.abs(back - x)) <= 1e-4


def test_sigmoid_decode_matches_root_finder():
    crf = Crf(CrfKind.SIGMOID_POLY, 2.3, 0.45)
    for y in np.linspace(0.01, 0.99, 15):
        expected = brentq(lambda v: float(crf.encode(v)) - y, 0.0, 1.0, xtol=1e-14)
        assert float(crf.decode(y)) == pytest.approx(expected, abs=1e-10)


def test_apply_crf_clamps_out_of_range(caplog):
    out = apply_crf(np.array([-0.2, 0.5, 1.3]), Crf(CrfKind.GAMMA, 2.0))
    np.testing.assert_allclose(out, [0.0, np.sqrt(0.5), 1.0])
    assert "clamped 2" in caplog.text


def test_darken():
    img = _lin(np.full((4, 4, 3), 0.5))
    np.testing.assert_array_equal(darken(img, 1.0).data, img.data)
    np.testing.assert_allclose(darken(img, 0.1).data, 0.05)
    with pytest.raises(InvalidInputError):
        darken(img, 0.0)
    with pytest.raises(InvalidInputError):
        darken(img, 1.5)


def test_darken_is_linear(rng):
    img = _lin(rng.random((30, 30, 3)))
    assert np.mean(darken(img, 0.17).data) == pytest.approx(0.17 * np.mean(img.data), abs=1e-7)


def test_zero_noise_is_identity(rng):
    img = _lin(rng.random((10, 10, 3)))
    np.testing.assert_array_equal(add_shot_read_noise(img, 0.0, 0.0, rng).data, img.data)


def test_noise_variance_at_quarter():
    img = _lin(np.full((1000, 1000, 1), 0.25))
    out = add_shot_read_noise(img, 0.02, 0.01, np.random.default_rng(3)).data
    expected = 0.25 * 0.02**2 + 0.01**2
    assert expected == pytest.approx(2.0e-4)
    assert abs(out.var() - expected) / expected <= 0.05


def test_noise_mean_is_unbiased():
    img = _lin(np.full((1000, 1000, 1), 0.5))
    out = add_shot_read_noise(img, 0.02, 0.01, np.random.default_rng(4)).data
    se = out.std() / np.sqrt(out.size)
    assert abs(out.mean() - 0.5) <= 3 * se


def test_noise_is_deterministic(rng):
    img = _lin(np.full((20, 20, 3), 0.3))
    a = add_shot_read_noise(img, 0.02, 0.01, np.random.default_rng(9)).data
    b = add_shot_read_noise(img, 0.02, 0.01, np.random.default_rng(9)).data
    np.testing.assert_array_equal(a, b)


def test_quantize_half():
    assert quantize_array(np.array([0.5]), 8)[0] == 128 / 255
    assert quantize_array(np.array([0.5]), 8)[0] == pytest.approx(0.50196, abs=1e-5)


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50), st.sampled_from([8, 10, 12, 16]))
def test_quantize_idempotent_and_bounded(values, bits):
    x = np.array(values)
    q = quantize_array(x, bits)
    np.testing.assert_array_equal(quantize_array(q, bits), q)
    assert np.max(np.abs(q - x)) <= 0.5 / (2**bits - 1) + 1e-15


def test_quantize_rejects_bits():
    with pytest.raises(InvalidInputError):
        quantize(_lin(np.zeros((1, 1, 1))), 9)


def test_sim_config_validation():
    with pytest.raises(InvalidInputError):
        SimConfig(gamma_range=(2.0, 1.0))
    with pytest.raises(InvalidInputError):
        SimConfig(darken_range=(0.0, 0.1))
    with pytest.raises(InvalidInputError):
        SimConfig(quant_bits=7)
    with pytest.raises(InvalidInputError):
        SimConfig(shot_sigma_range=(-0.1, 0.1))
    with pytest.raises(ValueError):
        SimConfig(crf_kinds=("spline",))


def test_identity_pipeline_is_quantization(rng):
    bright = make_scene(rng, 64, 96)
    dark, same, prov = simulate_pair(bright, IDENTITY_CFG, 0)
    np.testing.assert_array_equal(dark.data, quantize(bright, 8).data)
    assert same is bright
    assert prov.weight == 1.0 and prov.clamp_count == 0


def test_gamma_one_pipeline_reduces_to_scaled_noise(rng):
    cfg = SimConfig(gamma_range=(1.0, 1.0), crf_kinds=("gamma",), master_seed=21)
    bright = make_scene(rng, 48, 64)
    dark, _, prov = simulate_pair(bright, cfg, 5)
    # replay the same stream: w, sigma_shot, sigma_read, then the two noise fields
    r = item_rng(21, 5)
    w = r.uniform(*cfg.darken_range)
    ss = r.uniform(*cfg.shot_sigma_range)
    sr = r.uniform(*cfg.read_sigma_range)
    x = w * bright.data
    y = x + np.sqrt(x) * ss * r.standard_normal(x.shape) + sr * r.standard_normal(x.shape)
    expected = np.floor(np.clip(y, 0, 1) * 255 + 0.5) / 255
    assert (prov.weight, prov.sigma_shot, prov.sigma_read) == (w, ss, sr)
    np.testing.assert_array_equal(dark.data, expected)


def test_simulate_pair_deterministic(rng):
    bright = make_scene(rng, 64, 96)
    cfg = SimConfig(master_seed=99)
    a, _, pa = simulate_pair(bright, cfg, 3)
    b, _, pb = simulate_pair(bright, cfg, 3)
    c, _, _ = simulate_pair(bright, cfg, 4)
    np.testing.assert_array_equal(a.data, b.data)
    assert pa == pb
    assert not np.array_equal(a.data, c.data)


def test_dark_is_darker_than_bright():
    rng = np.random.default_rng(50)
    cfg = SimConfig(master_seed=1)
    for i in range(50):
        bright = make_scene(rng, 64, 96)
        dark, _, prov = simulate_pair(bright, cfg, i)
        assert prov.weight < 1
        assert mean_luminance(dark) < mean_luminance(bright)


@pytest.fixture
def corpus(tmp_path):
    write_corpus(tmp_path / "corpus", 3, seed=0, height=48, width=64)
    return tmp_path / "corpus"


def test_generate_zero(corpus, tmp_path):
    manifest = generate_dataset(corpus, tmp_path / "out", SimConfig(), 0)
    assert manifest.read_text() == ""
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["manifest.jsonl"]


def test_generate_ten(corpus, tmp_path):
    manifest = generate_dataset(corpus, tmp_path / "out", SimConfig(master_seed=7), 10)
    records = [json.loads(line) for line in manifest.read_text().splitlines()]
    assert len(records) == 10
    pngs = sorted(p.name for p in (tmp_path / "out").glob("*.png"))
    assert len(pngs) == 20
    assert records[3]["dark_file"] == "dark_0003.png"
    for key in ("gamma_in", "gamma_out", "weight", "sigma_shot", "sigma_read", "clamp_count"):
        assert key in records[0]
    assert read_png(tmp_path / "out" / "dark_0000.png").shape == (48, 64, 3)


def test_generate_is_reproducible_across_workers(corpus, tmp_path):
    cfg = SimConfig(master_seed=7)
    m1 = generate_dataset(corpus, tmp_path / "a", cfg, 6, workers=1)
    m2 = generate_dataset(corpus, tmp_path / "b", cfg, 6, workers=4)
    assert m1.read_bytes() == m2.read_bytes()
    for i in range(6):
        name = f"dark_{i:04d}.png"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_errors(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(InvalidInputError):
        generate_dataset(tmp_path / "empty", tmp_path / "out", SimConfig(), 1)
    with pytest.raises(FileNotFoundError):
        generate_dataset(tmp_path / "missing", tmp_path / "out", SimConfig(), 1)
