"""Command-line entry point.

Commands: ``prepare``, ``train``, ``predict``, ``cv``, ``compare``,
``gradcheck`` and ``synth``. Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .artifact import load_model, save_model
from .config import RunConfig, load_config, parse_value
from .corpus import (ABUSE, ABUSIVE, NONE, THREE_CLASS, Example, LabeledCorpus, SynthSpec, load_dataset,
                     segment_datasets, synth_corpus, corpus_share_sizes, write_dataset)
from .diagnostics import GRADCHECK_KINDS, TOLERANCE, gradcheck_kind
from .errors import ConfigError, DataError, NumericError
from .ndcore import GraphError
from .pipeline import compose_predictions, render_report, run, write_reports
from .systems import SYSTEM_KINDS, make_system

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
VIEW_FILES = ("one_step.tsv", "two_step_1.tsv", "two_step_2.tsv")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twostep", description="One-step and two-step abusive language classification.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="write the one-step and two-step dataset views and a counts summary")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output directory")

    for name, help_ in (("cv", "cross-validate one pipeline and write report tables"),
                        ("compare", "cross-validate one-step and two-step pipelines side by side")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--dataset")
        p.add_argument("--mode", choices=("one_step", "two_step"))
        p.add_argument("--model", choices=SYSTEM_KINDS, help="one-step system (and default step 1)")
        p.add_argument("--step1", choices=SYSTEM_KINDS)
        p.add_argument("--step2", choices=SYSTEM_KINDS)
        p.add_argument("--folds", type=int, help="number of folds (default 10)")
        p.add_argument("--out", help="report directory")

    p = sub.add_parser("train", help="fit on a whole dataset and save a model")
    _common(p)
    p.add_argument("--dataset")
    p.add_argument("--mode", choices=("one_step", "two_step"))
    p.add_argument("--model", choices=SYSTEM_KINDS)
    p.add_argument("--step1", choices=SYSTEM_KINDS)
    p.add_argument("--step2", choices=SYSTEM_KINDS)
    p.add_argument("--out", required=True, help="model file (one_step) or directory (two_step)")

    p = sub.add_parser("predict", help="label texts with a saved model")
    p.add_argument("--artifact", required=True, help="model file or two-step model directory")
    p.add_argument("--input", required=True, help="TSV of id<TAB>text or id<TAB>label<TAB>text rows")
    p.add_argument("--out", help="output TSV (default stdout)")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check at reduced size")
    p.add_argument("--model", choices=GRADCHECK_KINDS + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coords", type=int, default=20, help="coordinates sampled per tensor")
    p.add_argument("--inject-bug", action="store_true", help="flip a backward sign to test the harness")

    p = sub.add_parser("synth", help="write a synthetic three-class corpus")
    p.add_argument("--size", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _run_config(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = parse_value(key.strip(), value)
    for key in ("seed", "dataset", "mode", "model", "step1", "step2", "folds", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides)


def _dataset(config: RunConfig) -> LabeledCorpus:
    if not config.dataset:
        raise ConfigError("no dataset given (use --dataset or a 'dataset' config key)")
    return load_dataset(config.dataset)


# ---------------------------------------------------------------- commands

def cmd_prepare(dataset, out_dir) -> dict[str, dict[str, int]]:
    corpus = load_dataset(dataset)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    views = segment_datasets(corpus)
    for view, name in zip(views, VIEW_FILES):
        write_dataset(view, out / name)
    counts = counts_summary(corpus)
    lines = ["view\tlabel\tcount"]
    for view, labels in counts.items():
        lines += [f"{view}\t{label}\t{n}" for label, n in labels.items()]
    (out / "counts.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return counts


def counts_summary(corpus: LabeledCorpus) -> dict[str, dict[str, int]]:
    """Per-view label counts of the three segmented datasets."""
    one, step1, step2 = segment_datasets(corpus)
    return {
        "one_step": {k: one.counts().get(k, 0) for k in THREE_CLASS.labels},
        "two_step_1": {k: step1.counts().get(k, 0) for k in ABUSE.labels},
        "two_step_2": {k: step2.counts().get(k, 0) for k in step2.schema.labels},
    }


def cmd_cv(config: RunConfig, mode: str | None = None) -> str:
    corpus = _dataset(config)
    result = run(config.pipeline_spec(mode), corpus, config.settings())
    write_reports([result], config.out)
    return render_report([result])


def cmd_compare(config: RunConfig) -> str:
    corpus = _dataset(config)
    settings = config.settings()
    results = [run(config.pipeline_spec(m), corpus, settings) for m in ("one_step", "two_step")]
    write_reports(results, config.out)
    return render_report(results)


def cmd_train(config: RunConfig, out) -> list[Path]:
    corpus = _dataset(config)
    spec = config.pipeline_spec()
    settings = config.settings()
    if spec.mode == "one_step":
        system = make_system(spec.step1, THREE_CLASS, settings)
        system.fit(corpus)
        return [save_model(system, out)]
    _, view1, view2 = segment_datasets(corpus)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind, view, name in ((spec.step1, view1, "step1.model"), (spec.step2, view2, "step2.model")):
        system = make_system(kind, view.schema, settings)
        system.fit(view)
        written.append(save_model(system, out / name))
    return written


def read_inputs(path) -> LabeledCorpus:
    """Rows of ``id<TAB>text`` or ``id<TAB>label<TAB>text``; labels are ignored."""
    path = Path(path)
    if not path.exists():
        raise DataError("no such file", path=path)
    examples = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError("expected id<TAB>text", path=path, line=lineno)
            text = parts[-1] if len(parts) == 2 else "\t".join(parts[2:])
            examples.append(Example(parts[0], NONE, text))
    try:
        return LabeledCorpus(tuple(examples))
    except DataError as err:
        raise DataError(str(err), path=path) from None


def cmd_predict(artifact, input_path) -> list[str]:
    """Output lines: a header, then ``id, label, p_none, p_racism, p_sexism`` per row.

    For a two-step model the class probabilities are
    ``(1 - p_abusive, p_abusive * p_racism, p_abusive * p_sexism)`` and the
    label follows the threshold rule rather than their argmax.
    """
    artifact = Path(artifact)
    if artifact.is_dir():
        sys1, sys2 = load_model(artifact / "step1.model"), load_model(artifact / "step2.model")
        corpus = read_inputs(input_path)
        p_abusive = sys1.predict_proba(corpus)[:, ABUSE.index(ABUSIVE)]
        p2 = sys2.predict_proba(corpus)
        pred = compose_predictions(p_abusive, p2)
        probs = np.column_stack([1 - p_abusive, p_abusive[:, None] * p2])
        labels = THREE_CLASS.labels
    else:
        system = load_model(artifact)
        corpus = read_inputs(input_path)
        probs = system.predict_proba(corpus)
        pred = probs.argmax(axis=1)
        labels = system.schema.labels
    lines = ["\t".join(["id", "label"] + [f"p_{c}" for c in labels])]
    for ex_id, k, row in zip(corpus.ids, pred, probs):
        lines.append("\t".join([ex_id, labels[k]] + [f"{p:.6f}" for p in row]))
    return lines


def cmd_gradcheck(kind: str = "all", seed: int = 0, n_coords: int = 20,
                  inject_bug: bool = False) -> tuple[bool, list[str]]:
    kinds = GRADCHECK_KINDS if kind == "all" else (kind,)
    lines, ok = [], True
    for k in kinds:
        errs = gradcheck_kind(k, n_coords=n_coords, seed=seed, inject_bug=inject_bug)
        worst = max(errs.values())
        passed = worst < TOLERANCE
        ok &= passed
        lines.append(f"{k:<10} max rel err {worst:.3e}  {'PASS' if passed else 'FAIL'}")
    return ok, lines


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "prepare":
            counts = cmd_prepare(args.dataset, args.out)
            for view, labels in counts.items():
                print(view + "\t" + "\t".join(f"{k}={n}" for k, n in labels.items()))
        elif args.command in ("cv", "compare"):
            config = _run_config(args)
            print(cmd_cv(config) if args.command == "cv" else cmd_compare(config), end="")
        elif args.command == "train":
            config = _run_config(args)
            for path in cmd_train(config, args.out):
                print(f"saved {path}")
        elif args.command == "predict":
            lines = cmd_predict(args.artifact, args.input)
            text = "\n".join(lines) + "\n"
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
        elif args.command == "gradcheck":
            ok, lines = cmd_gradcheck(args.model, args.seed, args.coords, args.inject_bug)
            print("\n".join(lines))
            return EXIT_OK if ok else EXIT_NUMERIC
        elif args.command == "synth":
            if args.size < 1:
                raise ConfigError("--size must be >= 1")
            write_dataset(synth_corpus(SynthSpec(sizes=corpus_share_sizes(args.size)), seed=args.seed), args.out)
            print(f"wrote {args.size} examples to {args.out}")
    except ConfigError as err:
        print(f"twostep: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as err:
        print(f"twostep: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, GraphError, FloatingPointError) as err:
        print(f"twostep: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
