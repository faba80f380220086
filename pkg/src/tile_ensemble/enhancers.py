"""Tile enhancement operators.

Every enhancer maps a D x D CIELAB tile and a gain constant to a CIELAB tile of the
same shape. The trained network is not part of this package; ``EXTERNAL`` forwards
tiles to a separate process over the ENH1 wire protocol (see :mod:`.adapter`).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, ShapeMismatchError
from .image import (
    Tile,
    lab_to_srgb_array,
    linear_luminance,
    linear_to_srgb,
    srgb_to_lab_array,
    srgb_to_linear,
)

AUTO_GAIN_TARGET = 0.35
AUTO_GAIN_BOUNDS = (1e-3, 1e3)
CHROMA_EPS_FLOOR = 1e-6


class EnhancerKind(enum.Enum):
    IDENTITY = "identity"
    GAIN_GAMMA = "gain-gamma"
    EXTERNAL = "external"
    NOISY_WRAPPER = "noisy"


@dataclass(frozen=True)
class EnhancerSpec:
    kind: EnhancerKind = EnhancerKind.GAIN_GAMMA
    gain: float = 1.0
    # GAIN_GAMMA: output tone curve x**(1/tone_gamma); None re-encodes with the sRGB curve
    tone_gamma: float | None = 2.2
    chroma_radius: int = 4
    # guided-filter regularizer as a fraction of the tile's L variance
    chroma_eps: float = 0.05
    # NOISY_WRAPPER
    inner: "EnhancerSpec | None" = None
    sigma: float = 0.0
    seed: int = 0
    # EXTERNAL
    cmd: str | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if not self.gain > 0:
            raise InvalidInputError("gain must be positive")
        if self.sigma < 0:
            raise InvalidInputError("noise sigma must be non-negative")
        if self.tone_gamma is not None and self.tone_gamma <= 0:
            raise InvalidInputError("tone gamma must be positive")
        if self.chroma_radius < 0:
            raise InvalidInputError("chroma radius must be non-negative")
        if self.chroma_eps < 0:
            raise InvalidInputError("chroma eps must be non-negative")
        if self.kind is EnhancerKind.NOISY_WRAPPER and self.inner is None:
            raise InvalidInputError("noisy wrapper needs an inner enhancer")
        if self.kind is EnhancerKind.EXTERNAL and not self.cmd:
            raise InvalidInputError("external enhancer needs a command")

    @classmethod
    def identity(cls, gain: float = 1.0) -> "EnhancerSpec":
        return cls(EnhancerKind.IDENTITY, gain=gain)

    @classmethod
    def noisy(cls, inner: "EnhancerSpec", sigma: float, seed: int = 0) -> "EnhancerSpec":
        return cls(EnhancerKind.NOISY_WRAPPER, gain=inner.gain, inner=inner, sigma=sigma, seed=seed)

    @classmethod
    def external(cls, cmd: str, gain: float = 1.0, timeout: float = 30.0) -> "EnhancerSpec":
        return cls(EnhancerKind.EXTERNAL, gain=gain, cmd=cmd, timeout=timeout)

    def with_seed(self, seed: int) -> "EnhancerSpec":
        return replace(self, seed=seed)


def guided_filter(guide: np.ndarray, src: np.ndarray, radius: int, eps: float) -> np.ndarray:
    """Edge-preserving smoothing of ``src`` steered by ``guide`` (both 2-D)."""
    size = 2 * radius + 1

    def box(x):
        return ndimage.uniform_filter(x, size=size, mode="reflect")

    mean_i, mean_p = box(guide), box(src)
    var_i = box(guide * guide) - mean_i * mean_i
    cov_ip = box(guide * src) - mean_i * mean_p
    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return box(a) * guide + box(b)


def _gain_gamma(lab: np.ndarray, gain: float, spec: EnhancerSpec) -> np.ndarray:
    lin = np.clip(srgb_to_linear(lab_to_srgb_array(lab)) * gain, 0.0, 1.0)
    if spec.tone_gamma is None:
        encoded = linear_to_srgb(lin)
    else:
        encoded = lin ** (1.0 / spec.tone_gamma)
    out = srgb_to_lab_array(encoded)
    if spec.chroma_radius > 0:
        guide = out[..., 0]
        # scaling by the tile's own contrast makes the smoothing depend on the whole tile
        eps = spec.chroma_eps * float(guide.var()) + CHROMA_EPS_FLOOR
        for c in (1, 2):
            out[..., c] = guided_filter(guide, out[..., c], spec.chroma_radius, eps)
    return out


class Enhancer:
    """Callable ``(tile, gain, index) -> tile``; ``index`` identifies the invocation."""

    def __init__(self, spec: EnhancerSpec):
        self.spec = spec

    def __call__(self, tile: Tile, gain: float | None = None, index: int = 0) -> Tile:
        gain = self.spec.gain if gain is None else gain
        out = self.run(tile.data, gain, index)
        if out.shape != tile.data.shape:
            raise ShapeMismatchError(f"enhancer returned {out.shape}, expected {tile.data.shape}")
        return Tile(out, tile.window, tile.space)

    def run(self, lab: np.ndarray, gain: float, index: int) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class IdentityEnhancer(Enhancer):
    def run(self, lab, gain, index):
        return lab


class GainGammaEnhancer(Enhancer):
    def run(self, lab, gain, index):
        return _gain_gamma(lab, gain, self.spec)


class NoisyEnhancer(Enhancer):
    """Adds one Gaussian field of std ``sigma`` per invocation, in sRGB intensity units.

    The field depends only on ``(seed, index)``.
    """

    def __init__(self, spec: EnhancerSpec):
        super().__init__(spec)
        self.inner = make_enhancer(spec.inner)

    def run(self, lab, gain, index):
        base = self.inner.run(lab, gain, index)
        rng = np.random.default_rng(np.random.SeedSequence(self.spec.seed, spawn_key=(index,)))
        rgb = lab_to_srgb_array(base) + self.spec.sigma * rng.standard_normal(base.shape)
        return srgb_to_lab_array(rgb)

    def close(self):
        self.inner.close()


def make_enhancer(spec: EnhancerSpec, connections: int = 1) -> Enhancer:
    """Build the runtime enhancer for ``spec``; ``connections`` caps external processes."""
    if spec.kind is EnhancerKind.IDENTITY:
        return IdentityEnhancer(spec)
    if spec.kind is EnhancerKind.GAIN_GAMMA:
        return GainGammaEnhancer(spec)
    if spec.kind is EnhancerKind.NOISY_WRAPPER:
        return NoisyEnhancer(spec)
    from .adapter import ExternalEnhancer

    return ExternalEnhancer(spec, connections=connections)


def enhance(spec: EnhancerSpec, tile: Tile, gain: float | None = None, index: int = 0) -> Tile:
    """One-shot enhancement of a single tile."""
    with make_enhancer(spec) as enh:
        return enh(tile, gain, index)


def auto_gain(rgb: np.ndarray, target: float = AUTO_GAIN_TARGET) -> float:
    """Gain that brings the mean linear luminance of ``rgb`` to ``target``.

    A heuristic for unattended runs, bounded to ``AUTO_GAIN_BOUNDS``.
    """
    mean = float(np.mean(linear_luminance(rgb)))
    lo, hi = AUTO_GAIN_BOUNDS
    if mean <= 0:
        return hi
    return float(np.clip(target / mean, lo, hi))
