"""Desk-scale comparison: 5-fold one-step HybridCNN vs two-step LR+LR on a synthetic corpus.

    python3 scripts/desk_experiment.py --size 2000 --folds 5 --out results/desk
"""
import argparse
import time

from twostep.diagnostics import desk_experiment
from twostep.pipeline import render_report, write_reports


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=2000)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/desk")
    args = ap.parse_args()

    start = time.perf_counter()
    one, two = desk_experiment(args.size, args.folds, args.seed)
    elapsed = time.perf_counter() - start
    write_reports([one, two], args.out)
    print(render_report([one, two]), end="")
    f1, f2 = one.total.weighted_f1, two.total.weighted_f1
    print(f"\none-step {f1:.3f}  two-step {f2:.3f}  |diff| {abs(f1 - f2):.3f}  ({elapsed / 60:.1f} min)")


if __name__ == "__main__":
    main()
