"""Per-pixel choice between the short-scale (class 0) and long-scale (class 1) estimates."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .adapter import SCL_MAGIC, Connection
from .enhancers import EnhancerSpec
from .ensemble import TileGrid, WeightFn, averaged_estimate, long_scale_estimate, make_tile_grid
from .errors import InvalidInputError, ShapeMismatchError
from .image import ColorSpace, Image, srgb_to_lab_array


@dataclass(frozen=True)
class ScaleMap:
    p_long: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p_long, dtype=np.float64)
        if p.ndim == 3 and p.shape[2] == 1:
            p = p[:, :, 0]
        if p.ndim != 2:
            raise InvalidInputError(f"scale map must be 2-D, got shape {p.shape}")
        if np.any(~np.isfinite(p)) or p.min() < 0 or p.max() > 1:
            raise InvalidInputError("scale probabilities must lie in [0, 1]")
        object.__setattr__(self, "p_long", p)

    @classmethod
    def constant(cls, height: int, width: int, p: float) -> "ScaleMap":
        return cls(np.full((height, width), float(p)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_long.shape

    @property
    def hard(self) -> bool:
        return bool(np.all((self.p_long == 0) | (self.p_long == 1)))


def _check_same(*imgs: Image) -> None:
    shapes = {img.shape for img in imgs}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"image shapes differ: {sorted(shapes)}")


def _check_map(img: Image, m: ScaleMap) -> None:
    if m.shape != (img.height, img.width):
        raise ShapeMismatchError(f"scale map is {m.shape}, images are {img.height}x{img.width}")


def oracle_mask(short_est: Image, long_est: Image, gt: Image) -> ScaleMap:
    """Class 1 wherever the long estimate has strictly smaller squared error to ``gt``."""
    _check_same(short_est, long_est, gt)
    err_short = np.sum((short_est.data - gt.data) ** 2, axis=2)
    err_long = np.sum((long_est.data - gt.data) ** 2, axis=2)
    return ScaleMap((err_long < err_short).astype(np.float64))


def blend_hard(short_est: Image, long_est: Image, mask: ScaleMap) -> Image:
    _check_same(short_est, long_est)
    _check_map(short_est, mask)
    if not mask.hard:
        raise InvalidInputError("blend_hard needs a 0/1 scale map")
    pick = mask.p_long[:, :, None] == 1
    return Image(np.where(pick, long_est.data, short_est.data))


def blend_soft(short_est: Image, long_est: Image, probs: ScaleMap) -> Image:
    """Per-pixel expectation ``(1 - p) short + p long``."""
    _check_same(short_est, long_est)
    _check_map(short_est, probs)
    p = probs.p_long[:, :, None]
    s, l = short_est.data, long_est.data
    out = (1.0 - p) * s + p * l
    # keep the result inside the segment despite rounding
    return Image(np.clip(out, np.minimum(s, l), np.maximum(s, l)))


def luminance_scale_predictor(dark_input: Image, radius: int = 8, threshold: float = 0.2) -> ScaleMap:
    """Long scale where the local mean of CIELAB L/100 falls below ``threshold``."""
    if dark_input.space is not ColorSpace.SRGB:
        raise InvalidInputError("luminance predictor expects an SRGB image")
    lum = srgb_to_lab_array(dark_input.data)[..., 0] / 100.0
    if radius > 0:
        lum = ndimage.uniform_filter(lum, size=2 * radius + 1, mode="nearest")
    return ScaleMap((lum < threshold).astype(np.float64))


def external_scale_predictor(cmd, dark_input: Image, timeout: float = 30.0) -> ScaleMap:
    conn = Connection(cmd, SCL_MAGIC, timeout)
    try:
        prob = conn.predict_scale(srgb_to_lab_array(dark_input.data))
    finally:
        conn.close()
    return ScaleMap(prob)


class Mode(enum.Enum):
    HARD = "hard"
    SOFT = "soft"


@dataclass(frozen=True)
class Predictor:
    """Where the scale map comes from: ``const``, ``luma``, ``exec`` or ``oracle``."""

    kind: str = "luma"
    p: float = 0.0
    radius: int = 8
    threshold: float = 0.2
    cmd: str | None = None

    @classmethod
    def parse(cls, text: str) -> "Predictor":
        head, _, rest = text.partition(":")
        try:
            if head == "const":
                return cls("const", p=float(rest))
            if head == "luma":
                radius, thr = rest.split(",")
                return cls("luma", radius=int(radius), threshold=float(thr))
            if head == "exec" and rest:
                return cls("exec", cmd=rest)
            if head == "oracle" and not rest:
                return cls("oracle")
        except ValueError:
            pass
        raise InvalidInputError(f"cannot parse predictor {text!r}")

    def __str__(self) -> str:
        if self.kind == "const":
            return f"const:{self.p:g}"
        if self.kind == "luma":
            return f"luma:{self.radius},{self.threshold:g}"
        if self.kind == "exec":
            return f"exec:{self.cmd}"
        return "oracle"


@dataclass
class EnsembleResult:
    short: Image
    long: Image
    scale_map: ScaleMap
    output: Image
    coverage: np.ndarray = field(repr=False)


def _f32(img: Image) -> Image:
    return Image(img.data.astype(np.float32).astype(np.float64))


def blend(short_est: Image, long_est: Image, m: ScaleMap, mode: Mode) -> Image:
    if mode is Mode.HARD:
        if not m.hard:
            m = ScaleMap((m.p_long >= 0.5).astype(np.float64))
        return blend_hard(short_est, long_est, m)
    return blend_soft(short_est, long_est, m)


def ensemble_estimate(
    dark_input: Image,
    spec: EnhancerSpec,
    grid: TileGrid | None = None,
    predictor: Predictor = Predictor(),
    mode: Mode = Mode.HARD,
    gt: Image | None = None,
    gain=None,
    weight: WeightFn = WeightFn(),
    long_size: int | None = None,
    workers: int = 1,
) -> EnsembleResult:
    """Short-scale average, long-scale estimate, scale map, and their blend.

    The short and long estimates and the map are rounded to float32 before blending,
    so blending the float32 intermediates again reproduces ``output`` exactly.
    HARD mode thresholds a soft map at 0.5.
    """
    if grid is None:
        grid = make_tile_grid(dark_input.height, dark_input.width)
    short_est, coverage = averaged_estimate(dark_input, spec, grid, weight, gain, workers)
    long_est = long_scale_estimate(dark_input, spec, long_size or grid.tile_px, gain)
    short_est, long_est = _f32(short_est), _f32(long_est)
    h, w = dark_input.height, dark_input.width

    if predictor.kind == "oracle":
        if gt is None:
            raise InvalidInputError("oracle scale selection needs a ground-truth image")
        m = oracle_mask(short_est, long_est, gt)
    elif predictor.kind == "const":
        m = ScaleMap.constant(h, w, predictor.p)
    elif predictor.kind == "luma":
        m = luminance_scale_predictor(dark_input, predictor.radius, predictor.threshold)
    elif predictor.kind == "exec":
        m = external_scale_predictor(predictor.cmd, dark_input)
    else:
        raise InvalidInputError(f"unknown predictor {predictor.kind!r}")
    m = ScaleMap(m.p_long.astype(np.float32).astype(np.float64))
    return EnsembleResult(short_est, long_est, m, blend(short_est, long_est, m, mode), coverage)
