"""Overfit check: batches each system needs to fit a 32-example separable corpus.

    python3 scripts/overfit.py [--max-batches 500] [--kinds lr,hybridcnn]
"""
import argparse
import time

from twostep.diagnostics import overfit, overfit_corpus
from twostep.systems import SYSTEM_KINDS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--max-batches", type=int, default=500)
    ap.add_argument("--kinds", default=",".join(SYSTEM_KINDS))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    corpus = overfit_corpus(args.size, args.seed)
    print(f"{'system':<10} {'batches':>7} {'train acc':>9} {'seconds':>8}")
    for kind in args.kinds.split(","):
        start = time.perf_counter()
        steps, acc, _ = overfit(kind, corpus, max_batches=args.max_batches)
        print(f"{kind:<10} {steps:>7} {acc:>9.3f} {time.perf_counter() - start:>8.1f}")


if __name__ == "__main__":
    main()
