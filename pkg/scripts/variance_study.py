"""Per-pixel spread of the averaged estimate under a seeded noisy enhancer versus sigma / sqrt(N).

    python scripts/variance_study.py --runs 100 --overlaps 0.5 0.7 0.8 0.9
"""
import argparse
import math

import numpy as np

from tile_ensemble.enhancers import EnhancerSpec
from tile_ensemble.ensemble import averaged_estimate, make_tile_grid
from tile_ensemble.image import Image


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--sigma", type=float, default=0.05)
    ap.add_argument("--tile-size", type=int, default=64)
    ap.add_argument("--height", type=int, default=128)
    ap.add_argument("--width", type=int, default=192)
    ap.add_argument("--overlaps", type=float, nargs="+", default=[0.5, 0.7, 0.8, 0.9])
    args = ap.parse_args()

    img = Image.srgb(np.full((args.height, args.width, 3), 0.5))
    i, j = args.height // 2, args.width // 2
    print(f"{'overlap':>7}  {'N':>4}  {'std/sigma':>9}  {'1/sqrt(N)':>9}")
    for overlap in args.overlaps:
        grid = make_tile_grid(args.height, args.width, args.tile_size, overlap, jitter_seed=11)
        n = int(grid.coverage()[i, j])
        values = [
            averaged_estimate(img, EnhancerSpec.noisy(EnhancerSpec.identity(), args.sigma, seed), grid)[0].data[i, j]
            for seed in range(args.runs)
        ]
        std = float(np.mean(np.std(values, axis=0, ddof=1)))
        print(f"{overlap:>7.2f}  {n:>4}  {std / args.sigma:>9.3f}  {1 / math.sqrt(n):>9.3f}")


if __name__ == "__main__":
    main()
