"""Full 10-fold comparison on a hydrated abusive-language corpus.

Runs every one-step system, the homogeneous two-step pairings and the
HybridCNN + LR pairing, then writes the three-class, step-1 and step-2
tables. Expect many hours on a CPU at the published model sizes.

    python3 scripts/real_corpus.py --dataset tweets.tsv --embeddings vectors.txt --out results/real
"""
import argparse

from twostep.corpus import load_dataset
from twostep.pipeline import PipelineSpec, render_report, run, write_reports
from twostep.systems import SYSTEM_KINDS, SystemSettings

ONE_STEP = SYSTEM_KINDS
TWO_STEP = [(k, k) for k in SYSTEM_KINDS] + [("hybridcnn", "lr")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", required=True)
    ap.add_argument("--embeddings", help="word2vec text format, 300-d")
    ap.add_argument("--unigram-counts", help="extra word counts for hashtag segmentation")
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", help="comma-separated one-step systems to run (default all)")
    ap.add_argument("--out", default="results/real")
    args = ap.parse_args()

    corpus = load_dataset(args.dataset)
    settings = SystemSettings(embeddings=args.embeddings, unigram_counts=args.unigram_counts)
    kinds = args.only.split(",") if args.only else ONE_STEP
    results = []
    for kind in kinds:
        results.append(run(PipelineSpec("one_step", kind, k=args.folds, seed=args.seed), corpus, settings))
        print(f"done one-step {kind}", flush=True)
    for s1, s2 in TWO_STEP:
        if s1 in kinds:
            results.append(run(PipelineSpec("two_step", s1, s2, k=args.folds, seed=args.seed), corpus, settings))
            print(f"done two-step {s1} + {s2}", flush=True)
    write_reports(results, args.out)
    print(render_report(results), end="")


if __name__ == "__main__":
    main()
