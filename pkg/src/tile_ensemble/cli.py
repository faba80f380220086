"""``tile-ensemble`` command line.

Exit codes: 0 success, 2 bad config or input, 3 file I/O failure, 4 adapter process
failure, 5 shape mismatch, 6 malformed adapter frame, 7 adapter timeout.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .enhancers import auto_gain
from .ensemble import crop_disagreement, make_tile_grid
from .errors import (
    AdapterError,
    AdapterTimeoutError,
    InvalidInputError,
    MalformedFrameError,
    ShapeMismatchError,
)
from .image import Window
from .io import list_images, read_image, write_image, write_png, write_rawf32
from .metrics import evaluate_dataset, evaluate_pairs
from .scale import Mode, ScaleMap, blend, blend_hard, ensemble_estimate, oracle_mask
from .sim import generate_dataset

log = logging.getLogger("tile_ensemble")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ADAPTER = 4
EXIT_SHAPE = 5
EXIT_MALFORMED = 6
EXIT_TIMEOUT = 7


def exit_code_for(exc: BaseException) -> int:
    # order matters: adapter shape errors are also shape mismatches
    if isinstance(exc, ShapeMismatchError):
        return EXIT_SHAPE
    if isinstance(exc, MalformedFrameError):
        return EXIT_MALFORMED
    if isinstance(exc, AdapterTimeoutError):
        return EXIT_TIMEOUT
    if isinstance(exc, AdapterError):
        return EXIT_ADAPTER
    if isinstance(exc, InvalidInputError):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def _run_config(args) -> RunConfig:
    return load_config(
        getattr(args, "config", None),
        tile_size=getattr(args, "tile_size", None),
        overlap=getattr(args, "overlap", None),
        weight=getattr(args, "weight", None),
        enhancer=getattr(args, "enhancer", None),
        gain=getattr(args, "gain", None),
        predictor=getattr(args, "predictor", None),
        mode=getattr(args, "mode", None),
        seed=getattr(args, "seed", None),
        workers=getattr(args, "workers", None),
        long_size=getattr(args, "long_size", None),
        noise_sigma=getattr(args, "noise_sigma", None),
    )


def _sibling(path: Path, tag: str, suffix: str | None = None) -> Path:
    return path.with_name(f"{path.stem}_{tag}{suffix or path.suffix}")


def _write_map(path: Path, m: ScaleMap) -> None:
    """Scale maps go out as 8-bit PNG (round(p * 255)) plus a lossless .rawf32."""
    write_png(path.with_suffix(".png"), m.p_long)
    write_rawf32(path.with_suffix(".rawf32"), m.p_long)


def enhance_file(src: Path, dst: Path, cfg: RunConfig, gt: Path | None = None, dump: bool = False, bits: int = 8):
    img = read_image(src)
    gain = auto_gain(img.data) if cfg.gain == "auto" else float(cfg.gain)
    log.info("%s: gain %.4g", src.name, gain)
    spec = cfg.enhancer_spec(gain)
    grid = make_tile_grid(img.height, img.width, cfg.tile_size, cfg.overlap, jitter_seed=cfg.seed)
    gt_img = read_image(gt) if gt is not None else None
    res = ensemble_estimate(
        img,
        spec,
        grid,
        predictor=cfg.predictor_obj(),
        mode=cfg.mode_enum(),
        gt=gt_img,
        gain=gain,
        weight=cfg.weight_fn(),
        long_size=cfg.long_size,
        workers=cfg.workers,
    )
    dst.parent.mkdir(parents=True, exist_ok=True)
    write_image(dst, res.output, bits=bits)
    if dump:
        write_image(_sibling(dst, "short"), res.short, bits=bits)
        write_image(_sibling(dst, "long"), res.long, bits=bits)
        _write_map(_sibling(dst, "scalemap"), res.scale_map)
    return res


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    sim_cfg = cfg.sim_config(master_seed=cfg.seed) if args.seed is not None else cfg.sim_config()
    manifest = generate_dataset(args.corpus, args.out, sim_cfg, args.count, workers=cfg.workers)
    print(manifest)
    return EXIT_OK


def cmd_enhance(args) -> int:
    cfg = _run_config(args)
    enhance_file(Path(args.input), Path(args.output), cfg, args.gt and Path(args.gt), args.dump_intermediate, args.bits)
    return EXIT_OK


def cmd_sequence(args) -> int:
    cfg = _run_config(args)
    frames = list_images(args.frames)
    if args.first_n is not None:
        frames = frames[: args.first_n]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for frame in frames:
        dst = out_dir / frame.name
        enhance_file(frame, dst, cfg, dump=args.dump_intermediate, bits=args.bits)
        outputs.append(dst)
    if args.gt_dir:
        gt_dir = Path(args.gt_dir)
        pairs = []
        for dst in outputs:
            gt = gt_dir / dst.name
            if not gt.is_file():
                raise FileNotFoundError(f"no ground truth for {dst.name} in {gt_dir}")
            pairs.append((dst.stem, dst, gt))
        report = evaluate_pairs(pairs, variant=f"{cfg.enhancer}/{cfg.predictor}/{cfg.mode}")
        report.write(out_dir / "metrics")
        print(report.table())
    return EXIT_OK


def cmd_oracle(args) -> int:
    short, long_, gt = (read_image(p) for p in (args.short, args.long, args.gt))
    mask = oracle_mask(short, long_, gt)
    out_mask = Path(args.out_mask)
    write_png(out_mask, mask.p_long)
    write_image(args.out_image, blend_hard(short, long_, mask))
    print(f"long-scale fraction: {mask.p_long.mean():.6f}")
    return EXIT_OK


def _read_map(path) -> ScaleMap:
    return ScaleMap(read_image(path).data[:, :, 0])


def cmd_blend(args) -> int:
    short, long_ = read_image(args.short), read_image(args.long)
    out = blend(short, long_, _read_map(args.mask), Mode(args.mode))
    write_image(args.out, out, bits=args.bits)
    return EXIT_OK


def cmd_metrics(args) -> int:
    report = evaluate_dataset(args.pred_dir, args.gt_dir)
    if args.out:
        report.write(args.out)
    print(report.table())
    return EXIT_OK


def _pixel_window(text: str, img) -> Window:
    try:
        top, left, size = (int(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"window must be 'top,left,size', got {text!r}") from None
    if top < 0 or left < 0 or size <= 0 or top + size > img.height or left + size > img.width:
        raise InvalidInputError(f"window {text} does not fit a {img.height}x{img.width} image")
    return Window.from_pixels(top, left, size, size, img.height, img.width)


def cmd_diagnose(args) -> int:
    cfg = _run_config(args)
    img = read_image(args.input)
    gain = auto_gain(img.data) if cfg.gain == "auto" else float(cfg.gain)
    win_a, win_b = _pixel_window(args.window_a, img), _pixel_window(args.window_b, img)
    heat, mean = crop_disagreement(img, cfg.enhancer_spec(gain), win_a, win_b, gain)
    write_png(args.heatmap, np.clip(heat * args.heatmap_scale, 0.0, 1.0))
    print(f"mean abs disagreement: {mean:.8f}")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--tile-size", type=int)
    p.add_argument("--long-size", type=int, help="long-scale tile side (default: tile size)")
    p.add_argument("--overlap", type=float)
    p.add_argument("--weight", choices=["uniform", "taper"])
    p.add_argument("--enhancer", help="identity | gain-gamma | exec:<command>")
    p.add_argument("--gain", help="positive number or 'auto'")
    p.add_argument("--noise-sigma", type=float, help="wrap the enhancer with seeded Gaussian noise")
    p.add_argument("--predictor", help="const:<p> | luma:<radius>,<thr> | exec:<command> | oracle")
    p.add_argument("--mode", choices=["hard", "soft"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tile-ensemble", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate simulated dark/bright pairs")
    p.add_argument("corpus")
    p.add_argument("out")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enhance", help="enhance one image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--gt", help="ground truth (needed by --predictor oracle)")
    p.add_argument("--dump-intermediate", action="store_true")
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    _common(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("sequence", help="enhance every frame of a directory")
    p.add_argument("frames")
    p.add_argument("out")
    p.add_argument("--gt-dir")
    p.add_argument("--first-n", type=int)
    p.add_argument("--dump-intermediate", action="store_true")
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    _common(p)
    p.set_defaults(func=cmd_sequence)

    p = sub.add_parser("oracle", help="oracle scale mask and blend from ground truth")
    p.add_argument("--short", required=True)
    p.add_argument("--long", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out-mask", required=True)
    p.add_argument("--out-image", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("blend", help="blend short/long estimates with a scale map")
    p.add_argument("--short", required=True)
    p.add_argument("--long", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--mode", choices=["hard", "soft"], default="hard")
    p.add_argument("--out", required=True)
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("metrics", help="PSNR/SSIM of paired directories")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--out", help="report prefix; writes <prefix>.csv and <prefix>.json")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("diagnose", help="disagreement of two overlapping crops")
    p.add_argument("input")
    p.add_argument("--window-a", required=True, help="top,left,size in pixels")
    p.add_argument("--window-b", required=True, help="top,left,size in pixels")
    p.add_argument("--heatmap", required=True)
    p.add_argument("--heatmap-scale", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("TILE_ENSEMBLE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, ShapeMismatchError, AdapterError, OSError) as exc:
        code = exit_code_for(exc)
        print(f"tile-ensemble {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
