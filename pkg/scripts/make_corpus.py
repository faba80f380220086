"""Write a procedural bright corpus and simulate dark/bright pairs from it.

    python scripts/make_corpus.py data/ --scenes 20 --pairs 40 --seed 0
"""
import argparse
from pathlib import Path

from tile_ensemble.sim import SimConfig, generate_dataset
from tile_ensemble.synth import write_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--scenes", type=int, default=20)
    ap.add_argument("--pairs", type=int, default=40)
    ap.add_argument("--height", type=int, default=400)
    ap.add_argument("--width", type=int, default=600)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quant-bits", type=int, default=8)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    corpus = args.out / "corpus"
    write_corpus(corpus, args.scenes, seed=args.seed, height=args.height, width=args.width)
    cfg = SimConfig(master_seed=args.seed, quant_bits=args.quant_bits)
    manifest = generate_dataset(corpus, args.out / "pairs", cfg, args.pairs, workers=args.workers)
    print(f"{args.scenes} scenes in {corpus}, {args.pairs} pairs listed in {manifest}")


if __name__ == "__main__":
    main()
