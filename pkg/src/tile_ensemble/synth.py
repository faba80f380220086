"""Procedural well-exposed sRGB scenes, used as a stand-in bright-image corpus."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .image import Image
from .io import write_png


def make_scene(rng: np.random.Generator, height: int = 400, width: int = 600) -> Image:
    """Smooth colour gradient, a few flat shapes with hard edges, and fine texture."""
    yy, xx = np.mgrid[0:height, 0:width] / max(height, width)
    base = rng.uniform(0.2, 0.8, size=3)
    slope = rng.uniform(-0.4, 0.4, size=(2, 3))
    img = base + yy[..., None] * slope[0] + xx[..., None] * slope[1]

    for _ in range(int(rng.integers(4, 9))):
        color = rng.uniform(0.05, 0.95, size=3)
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        ry, rx = rng.uniform(0.05, 0.3) * height, rng.uniform(0.05, 0.3) * width
        if rng.random() < 0.5:
            inside = ((yy * max(height, width) - cy) / ry) ** 2 + ((xx * max(height, width) - cx) / rx) ** 2 < 1
        else:
            inside = (np.abs(yy * max(height, width) - cy) < ry) & (np.abs(xx * max(height, width) - cx) < rx)
        img[inside] = color

    freq = rng.uniform(20, 60)
    stripes = 0.06 * np.sin(2 * np.pi * freq * (xx * np.cos(1.0) + yy * np.sin(1.0)))
    grain = ndimage.gaussian_filter(rng.standard_normal((height, width)), 1.5) * 0.08
    img = img + (stripes + grain)[..., None]
    return Image(np.clip(img, 0.0, 1.0))


def write_corpus(out_dir, count: int, seed: int = 0, height: int = 400, width: int = 600) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        path = out_dir / f"scene_{i:04d}.png"
        write_png(path, make_scene(rng, height, width).data)
        paths.append(path)
    return paths
