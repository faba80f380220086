"""Tile-averaging ensemble for low-light image restoration."""

__version__ = "0.1.0"

from .enhancers import EnhancerKind, EnhancerSpec, enhance, make_enhancer
from .ensemble import (
    TileGrid,
    WeightFn,
    WeightKind,
    averaged_estimate,
    crop_disagreement,
    long_scale_estimate,
    make_tile_grid,
)
from .image import ColorSpace, Image, Tile, Window, lab_to_rgb, reconstruct, rgb_to_lab, sample
from .metrics import evaluate_dataset, psnr, ssim
from .scale import Mode, Predictor, ScaleMap, blend_hard, blend_soft, ensemble_estimate, oracle_mask
from .sim import Crf, CrfKind, SimConfig, generate_dataset, simulate_pair
