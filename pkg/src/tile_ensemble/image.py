"""Image containers, sRGB/CIELAB conversion, and the tile sampling/reconstruction pair.

Images are stored interleaved as float64 arrays of shape (height, width, channels).
Normalized image-plane coordinates put pixel ``i`` of an ``N`` pixel axis at
``(i + 0.5) / N``; a :class:`Window` is an axis-aligned box in those coordinates.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

MIN_TILE = 32

# IEC 61966-2-1 sRGB primaries, D65
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
# white taken from the matrix itself so that sRGB (1,1,1) lands on a = b = 0
D65_WHITE = _RGB_TO_XYZ.sum(axis=1)

_LAB_DELTA = 6.0 / 29.0


class ColorSpace(enum.Enum):
    SRGB = "srgb"
    LINEAR_RGB = "linear_rgb"
    LAB = "lab"


@dataclass(frozen=True)
class Image:
    data: np.ndarray
    space: ColorSpace = ColorSpace.SRGB

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise InvalidInputError(f"expected (H, W, 1|3) samples, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInputError("image must have at least one pixel")
        if self.space is not ColorSpace.LAB:
            data = np.clip(data, 0.0, 1.0)
        object.__setattr__(self, "data", data)

    @classmethod
    def srgb(cls, data) -> "Image":
        return cls(data, ColorSpace.SRGB)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class Window:
    """Axis-aligned sub-rectangle of the unit square, standing for one crop/scale action."""

    x0: float
    y0: float
    w: float
    h: float

    def __post_init__(self):
        tol = 1e-9
        if self.w <= 0 or self.h <= 0:
            raise InvalidInputError("window extent must be positive")
        if self.x0 < -tol or self.y0 < -tol or self.x0 + self.w > 1 + tol or self.y0 + self.h > 1 + tol:
            raise InvalidInputError(f"window {self} leaves the unit square")

    @classmethod
    def full(cls) -> "Window":
        return cls(0.0, 0.0, 1.0, 1.0)

    @classmethod
    def from_pixels(cls, top: int, left: int, height: int, width: int, img_h: int, img_w: int) -> "Window":
        return cls(left / img_w, top / img_h, width / img_w, height / img_h)

    def pixel_box(self, img_h: int, img_w: int):
        """Return ``(top, left, height, width)`` when the window sits on whole pixels, else None."""
        vals = (self.y0 * img_h, self.x0 * img_w, self.h * img_h, self.w * img_w)
        ints = tuple(int(round(v)) for v in vals)
        if all(abs(v - i) < 1e-6 for v, i in zip(vals, ints)):
            return ints
        return None

    def intersect(self, other: "Window"):
        x0, y0 = max(self.x0, other.x0), max(self.y0, other.y0)
        x1 = min(self.x0 + self.w, other.x0 + other.w)
        y1 = min(self.y0 + self.h, other.y0 + other.h)
        if x1 - x0 <= 1e-12 or y1 - y0 <= 1e-12:
            return None
        return Window(x0, y0, x1 - x0, y1 - y0)


@dataclass(frozen=True)
class Tile:
    data: np.ndarray
    window: Window
    space: ColorSpace = ColorSpace.LAB

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[0] != data.shape[1]:
            raise InvalidInputError(f"tile must be D x D x C, got {data.shape}")
        if data.shape[0] < MIN_TILE:
            raise InvalidInputError(f"tile side {data.shape[0]} below minimum {MIN_TILE}")
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


# -- color ------------------------------------------------------------------


def srgb_to_linear(v):
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((np.maximum(v, 0.04045) + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(v):
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, None)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1 / 2.4) - 0.055)


def _lab_f(t):
    return np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)


def _lab_finv(t):
    return np.where(t > _LAB_DELTA, t**3, 3 * _LAB_DELTA**2 * (t - 4.0 / 29.0))


def srgb_to_lab_array(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] == 1:
        rgb = np.repeat(rgb, 3, axis=-1)
    xyz = srgb_to_linear(rgb) @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_to_srgb_array(lab: np.ndarray) -> np.ndarray:
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    f = np.stack([fy + lab[..., 1] / 500.0, fy, fy - lab[..., 2] / 200.0], axis=-1)
    xyz = _lab_finv(f) * D65_WHITE
    rgb = linear_to_srgb(xyz @ _XYZ_TO_RGB.T)
    return np.clip(rgb, 0.0, 1.0)


def linear_luminance(rgb: np.ndarray) -> np.ndarray:
    """Relative luminance Y of sRGB-encoded samples."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] == 1:
        return srgb_to_linear(rgb[..., 0])
    return srgb_to_linear(rgb) @ _RGB_TO_XYZ[1]


def rgb_to_lab(img: Image) -> Image:
    if img.space is not ColorSpace.SRGB:
        raise InvalidInputError(f"rgb_to_lab expects SRGB, got {img.space.name}")
    return Image(srgb_to_lab_array(img.data), ColorSpace.LAB)


def lab_to_rgb(img: Image) -> Image:
    if img.space is not ColorSpace.LAB:
        raise InvalidInputError(f"lab_to_rgb expects LAB, got {img.space.name}")
    return Image(lab_to_srgb_array(img.data), ColorSpace.SRGB)


# -- resampling -------------------------------------------------------------


def _axis_weights(coords: np.ndarray, n_src: int):
    """Neighbour indices and fractional weights for linear interpolation at ``coords``.

    Outside the outermost sample centres the two end samples are extrapolated
    linearly, so affine signals are reproduced everywhere.
    """
    if n_src == 1:
        zeros = np.zeros(coords.shape, dtype=np.intp)
        return zeros, zeros, np.zeros(coords.shape)
    i0 = np.clip(np.floor(coords).astype(np.intp), 0, n_src - 2)
    return i0, i0 + 1, coords - i0


def _interp_axis(arr: np.ndarray, coords: np.ndarray, axis: int) -> np.ndarray:
    i0, i1, t = _axis_weights(coords, arr.shape[axis])
    a = np.take(arr, i0, axis=axis)
    b = np.take(arr, i1, axis=axis)
    shape = [1] * arr.ndim
    shape[axis] = -1
    t = t.reshape(shape)
    return a + t * (b - a)


def _sample_coords(n_out: int, start: float, extent: float, n_src: int) -> np.ndarray:
    u = start + (np.arange(n_out) + 0.5) / n_out * extent
    return u * n_src - 0.5


def resize_bilinear(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable bilinear resize of an (H, W, C) array, pixel-centre aligned."""
    h, w = data.shape[:2]
    rows = _interp_axis(data, _sample_coords(out_h, 0.0, 1.0, h), 0)
    return _interp_axis(rows, _sample_coords(out_w, 0.0, 1.0, w), 1)


def _clamp_for(space: ColorSpace, data: np.ndarray) -> np.ndarray:
    if space is ColorSpace.LAB:
        return data
    return np.clip(data, 0.0, 1.0)


def sample(img: Image, win: Window, d: int, space: ColorSpace | None = None) -> Tile:
    """Restrict ``img`` to ``win`` and resample onto a ``d x d`` grid.

    Windows that cover exactly ``d x d`` whole pixels are cropped without interpolation.
    """
    if d < MIN_TILE:
        raise InvalidInputError(f"tile side {d} below minimum {MIN_TILE}")
    box = win.pixel_box(img.height, img.width)
    if box is not None and box[2] == d and box[3] == d:
        top, left = box[0], box[1]
        data = img.data[top : top + d, left : left + d].copy()
    else:
        rows = _interp_axis(img.data, _sample_coords(d, win.y0, win.h, img.height), 0)
        data = _interp_axis(rows, _sample_coords(d, win.x0, win.w, img.width), 1)
        data = _clamp_for(img.space, data)
    return Tile(data, win, img.space if space is None else space)


def support_mask(win: Window, height: int, width: int) -> np.ndarray:
    """Boolean (H, W) mask of pixels whose centres fall inside ``win``."""
    eps = 1e-9
    yc = (np.arange(height) + 0.5) / height
    xc = (np.arange(width) + 0.5) / width
    ym = (yc >= win.y0 - eps) & (yc < win.y0 + win.h - eps)
    xm = (xc >= win.x0 - eps) & (xc < win.x0 + win.w - eps)
    return ym[:, None] & xm[None, :]


def reconstruct(tile: Tile, height: int, width: int):
    """Map a tile back through its window onto an ``height x width`` pixel grid.

    Returns ``(fragment, mask)``: the fragment is zero outside the support mask.
    """
    win = tile.window
    mask = support_mask(win, height, width)
    frag = np.zeros((height, width, tile.channels))
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0 or cols.size == 0:
        return frag, mask
    d = tile.size
    box = win.pixel_box(height, width)
    if box is not None and box[2] == d and box[3] == d:
        frag[box[0] : box[0] + d, box[1] : box[1] + d] = tile.data
        return frag, mask
    ty = ((rows + 0.5) / height - win.y0) / win.h * d - 0.5
    tx = ((cols + 0.5) / width - win.x0) / win.w * d - 0.5
    vals = _interp_axis(_interp_axis(tile.data, ty, 0), tx, 1)
    frag[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1] = _clamp_for(tile.space, vals)
    return frag, mask
