"""Overlapping-tile averaging, the long-scale path, and the crop-disagreement diagnostic.

The short-scale estimate at a pixel is the weighted mean of every tile estimate whose
window contains it; windows are native-resolution ``tile_px`` squares on a jittered
grid that never leaves the image. The long-scale estimate resamples the whole image to
one tile and back.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .enhancers import Enhancer, EnhancerSpec, make_enhancer
from .errors import InvalidInputError, ShapeMismatchError
from .image import (
    ColorSpace,
    Image,
    Tile,
    Window,
    lab_to_srgb_array,
    reconstruct,
    sample,
    srgb_to_lab_array,
    support_mask,
)

LONG_SCALE_INDEX = 2**31
# tiles enhanced per batch before they are folded into the accumulator
_BATCH = 64


class WeightKind(enum.Enum):
    UNIFORM = "uniform"
    TAPER = "taper"


@dataclass(frozen=True)
class WeightFn:
    kind: WeightKind = WeightKind.UNIFORM
    floor: float = 1e-3

    def tile_weights(self, d: int) -> np.ndarray:
        if self.kind is WeightKind.UNIFORM:
            return np.ones((d, d))
        u = (np.arange(d) + 0.5) / d
        # separable raised cosine: 1 at the centre, decaying to `floor` at the border
        prof = self.floor + (1.0 - self.floor) * np.sin(np.pi * u) ** 2
        return np.outer(prof, prof)


@dataclass(frozen=True)
class TileGrid:
    height: int
    width: int
    tile_px: int
    overlap: float
    jitter_seed: int | None
    boxes: tuple[tuple[int, int], ...] = field(repr=False)

    @property
    def stride(self) -> int:
        return grid_stride(self.tile_px, self.overlap)

    @property
    def windows(self) -> list[Window]:
        d, h, w = self.tile_px, self.height, self.width
        return [Window.from_pixels(top, left, d, d, h, w) for top, left in self.boxes]

    def __len__(self) -> int:
        return len(self.boxes)

    def coverage(self) -> np.ndarray:
        count = np.zeros((self.height, self.width), dtype=np.int64)
        d = self.tile_px
        for top, left in self.boxes:
            count[top : top + d, left : left + d] += 1
        return count


def grid_stride(tile_px: int, overlap: float) -> int:
    return max(1, int(round(tile_px * (1.0 - overlap))))


def _axis_positions(length: int, tile: int, stride: int) -> list[int]:
    pos = list(range(0, length - tile + 1, stride))
    if pos[-1] != length - tile:
        pos.append(length - tile)
    return pos


def make_tile_grid(height: int, width: int, tile_px: int = 256, overlap: float = 0.8, jitter_seed=None) -> TileGrid:
    """Row-major grid of ``tile_px`` windows overlapping by ``overlap``.

    With a ``jitter_seed`` every window not on the first or last row/column of the
    nominal grid is shifted by an independent integer offset of at most
    ``min(stride // 2, (tile_px - stride) // 2)`` per axis. Edge windows stay on the
    image border and the bound keeps consecutive windows overlapping, so every pixel
    stays covered.
    """
    if not 0.0 <= overlap < 1.0:
        raise InvalidInputError(f"overlap {overlap} outside [0, 1)")
    if tile_px > min(height, width):
        raise InvalidInputError(f"tile size {tile_px} exceeds image side {min(height, width)}")
    stride = grid_stride(tile_px, overlap)
    ys = _axis_positions(height, tile_px, stride)
    xs = _axis_positions(width, tile_px, stride)
    jitter = min(stride // 2, (tile_px - stride) // 2)
    rng = np.random.default_rng(jitter_seed) if jitter_seed is not None and jitter > 0 else None

    boxes = []
    for i, y0 in enumerate(ys):
        for j, x0 in enumerate(xs):
            y, x = y0, x0
            if rng is not None:
                dy, dx = rng.integers(-jitter, jitter + 1, size=2)
                if 0 < i < len(ys) - 1:
                    y = int(np.clip(y0 + dy, 0, height - tile_px))
                if 0 < j < len(xs) - 1:
                    x = int(np.clip(x0 + dx, 0, width - tile_px))
            boxes.append((int(y), int(x)))
    return TileGrid(height, width, tile_px, overlap, jitter_seed, tuple(boxes))


class Accumulator:
    """Running weighted sum and weight sum; ``result`` is their ratio."""

    def __init__(self, height: int, width: int, channels: int):
        self.weighted_sum = np.zeros((height, width, channels))
        self.weight_sum = np.zeros((height, width))
        self.count = np.zeros((height, width), dtype=np.int64)

    def add(self, top: int, left: int, estimate: np.ndarray, weights: np.ndarray) -> None:
        h, w = estimate.shape[:2]
        self.weighted_sum[top : top + h, left : left + w] += estimate * weights[:, :, None]
        self.weight_sum[top : top + h, left : left + w] += weights
        self.count[top : top + h, left : left + w] += 1

    def result(self) -> np.ndarray:
        if np.any(self.weight_sum <= 0):
            raise InvalidInputError("some pixels received no tile estimate")
        return self.weighted_sum / self.weight_sum[:, :, None]


def _to_output(rgb: np.ndarray, channels: int) -> np.ndarray:
    rgb = np.clip(rgb, 0.0, 1.0)
    if channels == 1:
        return rgb.mean(axis=2, keepdims=True)
    return rgb


class _enhancer_for:
    """Use a ready :class:`Enhancer` as is, or build (and later close) one from a spec."""

    def __init__(self, spec, connections: int = 1):
        self.owned = not isinstance(spec, Enhancer)
        self.enh = make_enhancer(spec, connections) if self.owned else spec

    def __enter__(self) -> Enhancer:
        return self.enh

    def __exit__(self, *exc):
        if self.owned:
            self.enh.close()


def enhance_srgb_tile(enh: Enhancer, rgb: np.ndarray, window: Window, gain, index: int) -> np.ndarray:
    """sRGB crop -> LAB -> enhancer -> clamped sRGB."""
    out = enh(Tile(srgb_to_lab_array(rgb), window), gain, index)
    return lab_to_srgb_array(out.data)


def averaged_estimate(img: Image, spec, grid: TileGrid, wf: WeightFn = WeightFn(), gain=None, workers: int = 1):
    """Weighted average of per-tile enhancements over ``grid``.

    Tiles may be enhanced concurrently, but they are always folded into the
    accumulator in grid order, so the result does not depend on ``workers``.
    Returns ``(image, coverage_count)``.
    """
    if img.space is not ColorSpace.SRGB:
        raise InvalidInputError("averaged_estimate expects an SRGB image")
    if (grid.height, grid.width) != (img.height, img.width):
        raise ShapeMismatchError(f"grid is {grid.height}x{grid.width}, image is {img.height}x{img.width}")
    d = grid.tile_px
    weights = wf.tile_weights(d)
    windows = grid.windows
    acc = Accumulator(img.height, img.width, 3)

    with _enhancer_for(spec, workers) as enh:

        def one(k: int) -> np.ndarray:
            top, left = grid.boxes[k]
            crop = img.data[top : top + d, left : left + d]
            return enhance_srgb_tile(enh, crop, windows[k], gain, k)

        pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for start in range(0, len(grid), _BATCH):
                idx = range(start, min(start + _BATCH, len(grid)))
                results = pool.map(one, idx) if pool else map(one, idx)
                for k, est in zip(idx, results):
                    top, left = grid.boxes[k]
                    acc.add(top, left, est, weights)
        finally:
            if pool:
                pool.shutdown(wait=True, cancel_futures=True)

    return Image(_to_output(acc.result(), img.channels)), acc.count


def long_scale_estimate(img: Image, spec, d: int = 256, gain=None) -> Image:
    """Enhance the whole image resampled to ``d x d`` and resample the result back."""
    if img.space is not ColorSpace.SRGB:
        raise InvalidInputError("long_scale_estimate expects an SRGB image")
    small = sample(img, Window.full(), d)
    with _enhancer_for(spec) as enh:
        rgb = enhance_srgb_tile(enh, small.data, small.window, gain, LONG_SCALE_INDEX)
    frag, _ = reconstruct(Tile(rgb, small.window, ColorSpace.SRGB), img.height, img.width)
    return Image(_to_output(frag, img.channels))


def _native_side(win: Window, img: Image) -> int:
    box = win.pixel_box(img.height, img.width)
    if box is None or box[2] != box[3]:
        raise InvalidInputError(f"{win} is not a square pixel window; pass an explicit tile size")
    return box[2]


def overlap_bbox(win: Window, height: int, width: int):
    mask = support_mask(win, height, width)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0 or cols.size == 0:
        raise InvalidInputError("overlap contains no pixel centres")
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def disagreement_map(a: np.ndarray, b: np.ndarray, win: Window) -> np.ndarray:
    """Channel-mean absolute difference of two full-size estimates inside ``win``."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{a.shape} vs {b.shape}")
    rs, cs = overlap_bbox(win, a.shape[0], a.shape[1])
    return np.abs(a[rs, cs] - b[rs, cs]).mean(axis=2)


def crop_disagreement(img: Image, spec, win_a: Window, win_b: Window, gain=None, d: int | None = None):
    """Enhance two overlapping crops independently and compare them where they overlap.

    Returns ``(heatmap, mean)``; the heatmap covers the pixels of ``win_a & win_b``.
    """
    inter = win_a.intersect(win_b)
    if inter is None:
        raise InvalidInputError("windows do not overlap")
    frags = []
    with _enhancer_for(spec) as enh:
        for k, win in enumerate((win_a, win_b)):
            tile = sample(img, win, d or _native_side(win, img))
            rgb = enhance_srgb_tile(enh, tile.data, win, gain, k)
            frag, _ = reconstruct(Tile(rgb, win, ColorSpace.SRGB), img.height, img.width)
            frags.append(frag)
    heat = disagreement_map(frags[0], frags[1], inter)
    return heat, float(heat.mean())
