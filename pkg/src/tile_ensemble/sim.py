"""Synthetic dark/bright pair generation.

A bright sRGB image is linearized through a random inverse camera response,
scaled down, corrupted with signal-dependent shot noise and read noise,
re-encoded through a second random response, and quantized.
"""
from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .image import ColorSpace, Image, linear_luminance
from .io import list_images, read_image, write_png

log = logging.getLogger(__name__)

QUANT_BITS = (8, 10, 12, 16)
_GRID = np.linspace(0.0, 1.0, 1024)


class CrfKind(enum.Enum):
    GAMMA = "gamma"
    SIGMOID_POLY = "sigmoid_poly"


@dataclass(frozen=True)
class Crf:
    """Monotone camera response on [0, 1].

    GAMMA encodes ``x ** (1 / gamma)``. SIGMOID_POLY follows the gamma curve with
    the cubic ``(1 - s) t + s (3 t^2 - 2 t^3)``, which stays increasing for ``0 <= s < 1``.
    """

    kind: CrfKind = CrfKind.GAMMA
    gamma: float = 2.2
    strength: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidInputError("gamma must be positive")
        if self.kind is CrfKind.SIGMOID_POLY and not 0.0 <= self.strength < 1.0:
            raise InvalidInputError("sigmoid strength must lie in [0, 1)")
        y = self.encode(_GRID)
        if abs(y[0]) > 1e-12 or abs(y[-1] - 1.0) > 1e-12 or np.any(np.diff(y) <= 0):
            raise InvalidInputError(f"{self} is not a strictly increasing map of [0,1] onto itself")

    def encode(self, x):
        t = np.asarray(x, dtype=np.float64) ** (1.0 / self.gamma)
        if self.kind is CrfKind.SIGMOID_POLY:
            s = self.strength
            t = (1 - s) * t + s * t * t * (3 - 2 * t)
        return t

    def decode(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.kind is CrfKind.GAMMA:
            return y**self.gamma
        # invert the cubic: bisection to a tight bracket, then Newton (slope >= 1 - s > 0)
        s = self.strength
        lo, hi = np.zeros_like(y), np.ones_like(y)
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            below = (1 - s) * mid + s * mid * mid * (3 - 2 * mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        t = 0.5 * (lo + hi)
        for _ in range(4):
            f = (1 - s) * t + s * t * t * (3 - 2 * t) - y
            t = np.clip(t - f / ((1 - s) + 6 * s * t * (1 - t)), lo, hi)
        return t**self.gamma

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "gamma": self.gamma, "strength": self.strength}


@dataclass(frozen=True)
class SimConfig:
    gamma_range: tuple[float, float] = (1.8, 2.6)
    darken_range: tuple[float, float] = (0.01, 0.25)
    shot_sigma_range: tuple[float, float] = (0.005, 0.05)
    read_sigma_range: tuple[float, float] = (0.001, 0.02)
    sigmoid_range: tuple[float, float] = (0.0, 0.5)
    crf_kinds: tuple[str, ...] = ("gamma", "sigmoid_poly")
    quant_bits: int = 8
    master_seed: int = 0

    def __post_init__(self):
        positive = {"gamma_range": self.gamma_range, "darken_range": self.darken_range}
        nonneg = {
            "shot_sigma_range": self.shot_sigma_range,
            "read_sigma_range": self.read_sigma_range,
            "sigmoid_range": self.sigmoid_range,
        }
        for name, (lo, hi) in {**positive, **nonneg}.items():
            if lo > hi:
                raise InvalidInputError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
        for name, (lo, _) in positive.items():
            if lo <= 0:
                raise InvalidInputError(f"{name} must be positive")
        for name, (lo, _) in nonneg.items():
            if lo < 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if self.darken_range[1] > 1:
            raise InvalidInputError("darkening weight cannot exceed 1")
        if self.sigmoid_range[1] >= 1:
            raise InvalidInputError("sigmoid strength must stay below 1")
        if self.quant_bits not in QUANT_BITS:
            raise InvalidInputError(f"quant_bits must be one of {QUANT_BITS}")
        if not self.crf_kinds:
            raise InvalidInputError("crf_kinds is empty")
        for kind in self.crf_kinds:
            CrfKind(kind)


def item_rng(master_seed: int, item_index: int) -> np.random.Generator:
    """Independent stream for one item, fixed by ``(master_seed, item_index)`` alone."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(item_index,)))


def _uniform(rng, bounds):
    lo, hi = bounds
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def sample_crf(rng: np.random.Generator, cfg: SimConfig = SimConfig()) -> Crf:
    kinds = cfg.crf_kinds
    kind = CrfKind(kinds[int(rng.integers(len(kinds)))] if len(kinds) > 1 else kinds[0])
    gamma = _uniform(rng, cfg.gamma_range)
    strength = _uniform(rng, cfg.sigmoid_range) if kind is CrfKind.SIGMOID_POLY else 0.0
    return Crf(kind, gamma, strength)


def _clamped(data: np.ndarray, what: str):
    n = int(np.count_nonzero((data < 0) | (data > 1)))
    if n:
        log.warning("%s: clamped %d out-of-range samples", what, n)
    return np.clip(data, 0.0, 1.0), n


def apply_crf(img, crf: Crf):
    """Encode linear samples. Accepts an :class:`Image` or a bare array and returns the same kind;
    out-of-range samples are clamped and counted in a warning."""
    if isinstance(img, Image):
        return Image(crf.encode(_clamped(img.data, "apply_crf")[0]), ColorSpace.SRGB)
    return crf.encode(_clamped(np.asarray(img, dtype=np.float64), "apply_crf")[0])


def invert_crf(img, crf: Crf):
    if isinstance(img, Image):
        return Image(crf.decode(_clamped(img.data, "invert_crf")[0]), ColorSpace.LINEAR_RGB)
    return crf.decode(_clamped(np.asarray(img, dtype=np.float64), "invert_crf")[0])


def darken(img: Image, w: float) -> Image:
    if not 0 < w <= 1:
        raise InvalidInputError(f"darkening weight {w} outside (0, 1]")
    return Image(img.data * w, ColorSpace.LINEAR_RGB)


def noise_array(x: np.ndarray, sigma_shot: float, sigma_read: float, rng: np.random.Generator):
    """Unclamped ``x + sqrt(x) * sigma_shot * e1 + sigma_read * e2``."""
    if sigma_shot < 0 or sigma_read < 0:
        raise InvalidInputError("noise sigmas must be non-negative")
    e1 = rng.standard_normal(x.shape)
    e2 = rng.standard_normal(x.shape)
    return x + np.sqrt(np.maximum(x, 0.0)) * sigma_shot * e1 + sigma_read * e2


def add_shot_read_noise(img: Image, sigma_shot: float, sigma_read: float, rng: np.random.Generator) -> Image:
    y = noise_array(img.data, sigma_shot, sigma_read, rng)
    return Image(np.clip(y, 0.0, 1.0), ColorSpace.LINEAR_RGB)


def quantize_array(data: np.ndarray, bits: int) -> np.ndarray:
    if bits not in QUANT_BITS:
        raise InvalidInputError(f"bits must be one of {QUANT_BITS}")
    levels = 2**bits - 1
    return np.floor(np.clip(data, 0.0, 1.0) * levels + 0.5) / levels


def quantize(img: Image, bits: int) -> Image:
    return Image(quantize_array(img.data, bits), img.space)


@dataclass
class Provenance:
    item_index: int
    crf_in: dict
    crf_out: dict
    weight: float
    sigma_shot: float
    sigma_read: float
    clamp_count: int
    source: str = ""


def simulate_pair(bright: Image, cfg: SimConfig, item_index: int, source: str = ""):
    """Return ``(dark, bright, provenance)``; a pure function of ``(cfg, item_index, bright)``."""
    if bright.space is not ColorSpace.SRGB:
        raise InvalidInputError("simulate_pair expects an SRGB bright image")
    rng = item_rng(cfg.master_seed, item_index)
    crf_in = sample_crf(rng, cfg)
    crf_out = sample_crf(rng, cfg)
    w = _uniform(rng, cfg.darken_range)
    sigma_shot = _uniform(rng, cfg.shot_sigma_range)
    sigma_read = _uniform(rng, cfg.read_sigma_range)

    linear = darken(invert_crf(bright, crf_in), w)
    noisy = noise_array(linear.data, sigma_shot, sigma_read, rng)
    noisy, clamp_count = np.clip(noisy, 0.0, 1.0), int(np.count_nonzero((noisy < 0) | (noisy > 1)))
    dark = quantize_array(crf_out.encode(noisy), cfg.quant_bits)
    prov = Provenance(item_index, crf_in.to_dict(), crf_out.to_dict(), w, sigma_shot, sigma_read, clamp_count, source)
    return Image(dark, ColorSpace.SRGB), bright, prov


def mean_luminance(img: Image) -> float:
    return float(np.mean(linear_luminance(img.data)))


def generate_dataset(corpus_dir, out_dir, cfg: SimConfig, count: int, workers: int = 1) -> Path:
    """Write ``dark_XXXX.png`` / ``bright_XXXX.png`` pairs and ``manifest.jsonl``.

    Item ``i`` draws from corpus image ``i mod len(corpus)`` in sorted filename order.
    """
    corpus_dir, out_dir = Path(corpus_dir), Path(out_dir)
    if count < 0:
        raise InvalidInputError("count must be non-negative")
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory {corpus_dir} does not exist")
    sources = list_images(corpus_dir)
    if not sources:
        raise InvalidInputError(f"corpus directory {corpus_dir} holds no images")
    out_dir.mkdir(parents=True, exist_ok=True)
    bits = 8 if cfg.quant_bits == 8 else 16

    def one(i: int) -> dict:
        src = sources[i % len(sources)]
        bright = read_image(src)
        if bright.channels == 4:
            bright = Image(bright.data[:, :, :3])
        dark, bright, prov = simulate_pair(bright, cfg, i, source=src.name)
        names = {"dark": f"dark_{i:04d}.png", "bright": f"bright_{i:04d}.png"}
        write_png(out_dir / names["dark"], dark.data, bits=bits)
        write_png(out_dir / names["bright"], bright.data, bits=bits)
        rec = {"pair_id": i, "dark_file": names["dark"], "bright_file": names["bright"]}
        rec.update(
            {
                "source": prov.source,
                "gamma_in": prov.crf_in["gamma"],
                "gamma_out": prov.crf_out["gamma"],
                "crf_in": prov.crf_in,
                "crf_out": prov.crf_out,
                "weight": prov.weight,
                "sigma_shot": prov.sigma_shot,
                "sigma_read": prov.sigma_read,
                "clamp_count": prov.clamp_count,
            }
        )
        return rec

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        records = list(pool.map(one, range(count)))

    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return manifest
