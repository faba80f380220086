"""PNG and ``.rawf32`` image files.

``.rawf32`` layout: 16-byte header (``b"RAWF"``, u32 height, u32 width, u32 channels,
all little-endian) followed by channel-planar float32 little-endian samples.
"""
from __future__ import annotations

import struct
from pathlib import Path

import cv2
import numpy as np

from .errors import InvalidInputError
from .image import ColorSpace, Image

RAW_MAGIC = b"RAWF"
_RAW_HEADER = struct.Struct("<4sIII")
IMAGE_SUFFIXES = (".png", ".rawf32")


def write_rawf32(path, data: np.ndarray) -> None:
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[:, :, None]
    h, w, c = data.shape
    planar = np.ascontiguousarray(np.transpose(data, (2, 0, 1)), dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(RAW_MAGIC, h, w, c))
        fh.write(planar.tobytes())


def read_rawf32(path) -> np.ndarray:
    """Read a ``.rawf32`` file into an (H, W, C) float32 array."""
    blob = Path(path).read_bytes()
    if len(blob) < _RAW_HEADER.size:
        raise InvalidInputError(f"{path}: truncated rawf32 header")
    magic, h, w, c = _RAW_HEADER.unpack_from(blob)
    if magic != RAW_MAGIC:
        raise InvalidInputError(f"{path}: bad rawf32 magic {magic!r}")
    expected = h * w * c * 4
    if len(blob) - _RAW_HEADER.size != expected:
        raise InvalidInputError(f"{path}: expected {expected} payload bytes, got {len(blob) - _RAW_HEADER.size}")
    planar = np.frombuffer(blob, dtype="<f4", offset=_RAW_HEADER.size).reshape(c, h, w)
    return np.transpose(planar, (1, 2, 0)).astype(np.float32)


def read_png(path) -> np.ndarray:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"cannot read image {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise InvalidInputError(f"{path}: unsupported sample type {raw.dtype}")
    if raw.ndim == 2:
        raw = raw[:, :, None]
    elif raw.shape[2] == 4:
        raw = raw[:, :, :3]
    if raw.shape[2] == 3:
        raw = raw[:, :, ::-1]
    return raw.astype(np.float64) / scale


def write_png(path, data: np.ndarray, bits: int = 8) -> None:
    if bits not in (8, 16):
        raise InvalidInputError("PNG depth must be 8 or 16 bits")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    peak = 255 if bits == 8 else 65535
    q = np.floor(np.clip(data, 0.0, 1.0) * peak + 0.5).astype(np.uint8 if bits == 8 else np.uint16)
    if q.ndim == 3:
        q = q[:, :, ::-1]
    if not cv2.imwrite(str(path), np.ascontiguousarray(q)):
        raise OSError(f"cannot write image {path}")


def read_image(path, space: ColorSpace = ColorSpace.SRGB) -> Image:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    if path.suffix.lower() == ".rawf32":
        return Image(read_rawf32(path).astype(np.float64), space)
    return Image(read_png(path), space)


def write_image(path, img, bits: int = 8) -> None:
    """Write an :class:`Image` or bare array; the format follows the file suffix."""
    data = img.data if isinstance(img, Image) else np.asarray(img)
    path = Path(path)
    if path.suffix.lower() == ".rawf32":
        write_rawf32(path, data)
    else:
        write_png(path, data, bits=bits)


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
