"""PSNR and SSIM, and paired-directory evaluation.

SSIM is computed on ITU-R BT.601 luma with an 11x11 Gaussian window (sigma 1.5),
K1 = 0.01, K2 = 0.03, data range 1, averaged over the positions where the window
fits entirely inside the image.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, ShapeMismatchError
from .image import Image
from .io import list_images, read_image

SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
BT601 = np.array([0.299, 0.587, 0.114])


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, Image) else np.asarray(x, dtype=np.float64)


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    a, b = _data(a), _data(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"psnr: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def luma(x: np.ndarray) -> np.ndarray:
    if x.ndim == 2:
        return x
    if x.shape[2] == 1:
        return x[:, :, 0]
    return x @ BT601


def _gaussian_taps() -> np.ndarray:
    r = (SSIM_WIN - 1) // 2
    t = np.exp(-(np.arange(-r, r + 1) ** 2) / (2 * SSIM_SIGMA**2))
    return t / t.sum()


def _local_mean(x: np.ndarray) -> np.ndarray:
    taps = _gaussian_taps()
    r = (SSIM_WIN - 1) // 2
    y = ndimage.correlate1d(x, taps, axis=0, mode="constant")
    y = ndimage.correlate1d(y, taps, axis=1, mode="constant")
    return y[r:-r, r:-r]


def ssim(a, b) -> float:
    x, y = luma(_data(a)), luma(_data(b))
    if x.shape != y.shape:
        raise ShapeMismatchError(f"ssim: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WIN:
        raise InvalidInputError(f"image smaller than the {SSIM_WIN}x{SSIM_WIN} SSIM window")
    c1, c2 = SSIM_K1**2, SSIM_K2**2
    mx, my = _local_mean(x), _local_mean(y)
    vx = _local_mean(x * x) - mx * mx
    vy = _local_mean(y * y) - my * my
    cxy = _local_mean(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.6f}"


@dataclass
class EvalReport:
    rows: list[tuple[str, float, float]] = field(default_factory=list)
    variant: str = ""

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r[1] for r in self.rows])) if self.rows else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r[2] for r in self.rows])) if self.rows else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "psnr_db", "ssim"])
        for rid, p, s in self.rows:
            writer.writerow([rid, _fmt(p), _fmt(s)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "count": len(self.rows),
            "mean_psnr_db": _fmt(self.mean_psnr),
            "mean_ssim": _fmt(self.mean_ssim),
            "variant": self.variant,
        }

    def table(self) -> str:
        width = max([len("id"), len("mean")] + [len(r[0]) for r in self.rows])
        lines = [f"{'id':<{width}}  {'psnr_db':>12}  {'ssim':>10}"]
        for rid, p, s in self.rows:
            lines.append(f"{rid:<{width}}  {_fmt(p):>12}  {_fmt(s):>10}")
        lines.append(f"{'mean':<{width}}  {_fmt(self.mean_psnr):>12}  {_fmt(self.mean_ssim):>10}")
        return "\n".join(lines)

    def write(self, out_prefix) -> tuple[Path, Path]:
        out_prefix = Path(out_prefix)
        csv_path = out_prefix.with_suffix(".csv")
        json_path = out_prefix.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def evaluate_pairs(pairs, variant: str = "") -> EvalReport:
    """Score ``(id, pred_path, gt_path)`` triples in the given order."""
    report = EvalReport(variant=variant)
    for rid, pred_path, gt_path in pairs:
        a, b = read_image(pred_path), read_image(gt_path)
        if a.shape != b.shape:
            raise ShapeMismatchError(f"{rid}: prediction {a.shape} vs ground truth {b.shape}")
        report.rows.append((rid, psnr(a, b), ssim(a, b)))
    return report


def evaluate_dataset(pred_dir, gt_dir, variant: str = "") -> EvalReport:
    """Pair files by stem and score each pair; rows come out in stem order."""
    preds = {p.stem: p for p in list_images(pred_dir)}
    gts = {p.stem: p for p in list_images(gt_dir)}
    missing = sorted(set(preds) ^ set(gts))
    if missing:
        raise FileNotFoundError(f"no counterpart for: {', '.join(missing)}")
    return evaluate_pairs(((stem, preds[stem], gts[stem]) for stem in sorted(preds)), variant)
