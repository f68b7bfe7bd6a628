"""One-step and two-step cross-validated experiments and their report tables."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import (ABUSE, ABUSE_TYPE, ABUSIVE, NONE, THREE_CLASS, FoldPlan, LabeledCorpus,
                     segment_datasets, stratified_folds)
from .errors import ConfigError, DataError
from .metrics import PRF, ConfusionMatrix, aggregate_folds, class_table, confusion, prf, single_table, \
    to_text, to_tsv
from .systems import DISPLAY_NAMES, SYSTEM_KINDS, System, SystemSettings, make_system
from .train import TrainReport

Factory = Callable[[str, object, SystemSettings], System]


@dataclass
class PipelineSpec:
    mode: str = "one_step"
    step1: str = "hybridcnn"
    step2: str | None = None
    k: int = 10
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.mode not in ("one_step", "two_step"):
            raise ConfigError(f"mode must be one_step or two_step, got {self.mode!r}")
        if self.mode == "two_step" and not self.step2:
            raise ConfigError("two_step mode needs a step-2 system")
        for kind in (self.step1, self.step2):
            if kind is not None and kind not in SYSTEM_KINDS:
                raise ConfigError(f"unknown system {kind!r}; expected one of {SYSTEM_KINDS}")
        if self.k < 2:
            raise ConfigError("need at least 2 folds")

    @property
    def name(self) -> str:
        if self.mode == "one_step":
            return DISPLAY_NAMES[self.step1]
        if self.step1 == self.step2:
            return f"{DISPLAY_NAMES[self.step1]} (two)"
        return f"{DISPLAY_NAMES[self.step1]} + {DISPLAY_NAMES[self.step2]} (two)"


@dataclass
class ExperimentResult:
    name: str
    mode: str
    total: PRF                                   # 3-class scores averaged over folds
    folds: list[PRF]
    confusion: ConfusionMatrix                   # pooled over folds, for inspection
    fold_test_ids: list[list[str]]
    step1: PRF | None = None                     # abusive detection (two-step only)
    step2: PRF | None = None                     # racism/sexism given abusive (two-step only)
    step1_folds: list[PRF] = field(default_factory=list)
    step2_folds: list[PRF] = field(default_factory=list)
    digests: list[dict] = field(default_factory=list)
    train_reports: list[dict] = field(default_factory=list)


def compose_two_step(p_abusive: float, step2_logits, threshold: float = 0.5) -> str:
    """Route an example through the two steps: None below threshold, else the step-2 argmax."""
    if p_abusive < threshold:
        return NONE
    return ABUSE_TYPE.labels[int(np.argmax(step2_logits))]


def compose_predictions(p_abusive: np.ndarray, step2_scores: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Vectorized :func:`compose_two_step`, returning three-class label indices."""
    labels = [compose_two_step(p, s, threshold) for p, s in zip(p_abusive, step2_scores)]
    return np.array([THREE_CLASS.index(lab) for lab in labels], dtype=np.int64)


def _folds(plan: FoldPlan, only_folds: Sequence[int] | None):
    return range(plan.k) if only_folds is None else list(only_folds)


def _check_corpus(corpus: LabeledCorpus):
    if corpus.schema != THREE_CLASS:
        raise DataError(f"experiments need a three-class corpus, got schema {corpus.schema.name}")


def run_one_step(spec: PipelineSpec, corpus: LabeledCorpus, settings: SystemSettings | None = None,
                 factory: Factory = make_system, plan: FoldPlan | None = None,
                 only_folds: Sequence[int] | None = None) -> ExperimentResult:
    """Cross-validate one three-class system; metrics are averaged over folds."""
    _check_corpus(corpus)
    settings = settings or SystemSettings()
    plan = plan or stratified_folds(corpus, spec.k, spec.seed)
    fold_prfs, ids, digests, reports = [], [], [], []
    pooled = np.zeros((3, 3), dtype=np.int64)
    for f in _folds(plan, only_folds):
        train_c = corpus.subset(plan.train_indices(f))
        test_c = corpus.subset(plan.test_indices(f))
        system = factory(spec.step1, THREE_CLASS, settings.with_seed(spec.seed + f))
        report = system.fit(train_c)
        pred = system.predict_proba(test_c).argmax(axis=1)
        cm = confusion(test_c.label_ids(), pred, 3, THREE_CLASS.labels)
        pooled += cm.counts
        fold_prfs.append(prf(cm))
        ids.append(test_c.ids)
        digests.append(system.digests())
        reports.append(_report_dict(report))
    return ExperimentResult(spec.name, "one_step", aggregate_folds(fold_prfs), fold_prfs,
                            ConfusionMatrix(pooled, THREE_CLASS.labels), ids, digests=digests,
                            train_reports=reports)


def run_two_step(spec: PipelineSpec, corpus: LabeledCorpus, settings: SystemSettings | None = None,
                 factory: Factory = make_system, plan: FoldPlan | None = None,
                 only_folds: Sequence[int] | None = None) -> ExperimentResult:
    """Cross-validate an abusive detector followed by a racism/sexism classifier.

    Both steps train on the same training folds as the one-step run with the
    same seed. Step 2 sees only the abusive training examples. The composed
    prediction applies step 2 to every test example that step 1 flags.
    """
    _check_corpus(corpus)
    if spec.step2 is None:
        raise ConfigError("two_step mode needs a step-2 system")
    settings = settings or SystemSettings()
    plan = plan or stratified_folds(corpus, spec.k, spec.seed)
    fold_prfs, s1_prfs, s2_prfs, ids, digests, reports = [], [], [], [], [], []
    pooled = np.zeros((3, 3), dtype=np.int64)
    abusive_col = ABUSE.index(ABUSIVE)
    for f in _folds(plan, only_folds):
        train_c = corpus.subset(plan.train_indices(f))
        test_c = corpus.subset(plan.test_indices(f))
        _, train1, train2 = segment_datasets(train_c)
        _, test1, test2 = segment_datasets(test_c)
        if len(train2) == 0:
            raise DataError(f"fold {f}: training split has no abusive examples; cannot fit step 2")
        sys1 = factory(spec.step1, ABUSE, settings.with_seed(spec.seed + f))
        sys2 = factory(spec.step2, ABUSE_TYPE, settings.with_seed(spec.seed + f))
        rep1 = sys1.fit(train1)
        rep2 = sys2.fit(train2)

        p1 = sys1.predict_proba(test1)
        # step 2 scores every test example; only those flagged by step 1 use them
        p2 = sys2.predict_proba(test_c)
        pred = compose_predictions(p1[:, abusive_col], p2, spec.threshold)
        cm = confusion(test_c.label_ids(), pred, 3, THREE_CLASS.labels)
        pooled += cm.counts
        fold_prfs.append(prf(cm))
        s1_prfs.append(prf(confusion(test1.label_ids(), p1.argmax(axis=1), 2, ABUSE.labels)))
        if len(test2):
            s2_pred = sys2.predict_proba(test2).argmax(axis=1)
            s2_prfs.append(prf(confusion(test2.label_ids(), s2_pred, 2, ABUSE_TYPE.labels)))
        ids.append(test_c.ids)
        digests.append({"step1": sys1.digests(), "step2": sys2.digests()})
        reports.append({"step1": _report_dict(rep1), "step2": _report_dict(rep2)})
    return ExperimentResult(spec.name, "two_step", aggregate_folds(fold_prfs), fold_prfs,
                            ConfusionMatrix(pooled, THREE_CLASS.labels), ids,
                            step1=aggregate_folds(s1_prfs), step2=aggregate_folds(s2_prfs) if s2_prfs else None,
                            step1_folds=s1_prfs, step2_folds=s2_prfs, digests=digests, train_reports=reports)


def run(spec: PipelineSpec, corpus: LabeledCorpus, settings: SystemSettings | None = None,
        **kwargs) -> ExperimentResult:
    runner = run_one_step if spec.mode == "one_step" else run_two_step
    return runner(spec, corpus, settings, **kwargs)


def _report_dict(report: TrainReport | None) -> dict:
    if report is None:
        return {}
    return {"best_epoch": report.best_epoch, "total_batches": report.total_batches,
            "eval_loss": list(report.eval_loss)}


# ---------------------------------------------------------------- reports

def step1_table(results: Sequence[ExperimentResult]) -> list[list[str]]:
    """Abusive-class scores next to the support-weighted scores over none/abusive."""
    table = [["Model", "Abusive Prec.", "Abusive Rec.", "Abusive F1",
              "Weighted Prec.", "Weighted Rec.", "Weighted F1"]]
    for r in results:
        if r.step1 is None:
            continue
        row = [r.name] + [f"{v:.3f}" for v in r.step1.row(ABUSIVE)] + [f"{v:.3f}" for v in r.step1.total]
        table.append(row)
    return table


def step2_table(results: Sequence[ExperimentResult]) -> list[list[str]]:
    return single_table([(r.name, r.step2.total) for r in results if r.step2 is not None])


def write_reports(results: Sequence[ExperimentResult], out_dir) -> list[Path]:
    """Write the TSV tables that apply to ``results`` plus a combined ``report.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    one = [r for r in results if r.mode == "one_step"]
    two = [r for r in results if r.mode == "two_step"]
    written = []
    sections = []
    if one:
        t = class_table([(r.name, r.total) for r in one], THREE_CLASS.labels)
        written.append(_write(out / "results_one_step.tsv", to_tsv(t)))
        sections.append("One-step classification (weighted averages over folds)\n" + to_text(t))
    if two:
        t = class_table([(r.name, r.total) for r in two], THREE_CLASS.labels)
        written.append(_write(out / "results_two_step.tsv", to_tsv(t)))
        sections.append("Two-step classification, composed\n" + to_text(t))
        t1 = step1_table(two)
        written.append(_write(out / "results_step1.tsv", to_tsv(t1)))
        sections.append("Step 1: abusive language detection\n" + to_text(t1))
        t2 = step2_table(two)
        written.append(_write(out / "results_step2.tsv", to_tsv(t2)))
        sections.append("Step 2: racism/sexism given abusive (weighted)\n" + to_text(t2))
    written.append(_write(out / "report.txt", "\n".join(sections)))
    return written


def render_report(results: Sequence[ExperimentResult]) -> str:
    one = [r for r in results if r.mode == "one_step"]
    two = [r for r in results if r.mode == "two_step"]
    rows = [(r.name, r.total) for r in one + two]
    text = to_text(class_table(rows, THREE_CLASS.labels))
    if two:
        text += "\n" + to_text(step1_table(two))
        if any(r.step2 is not None for r in two):
            text += "\n" + to_text(step2_table(two))
    return text


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path
