"""Confusion matrices, per-class and support-weighted precision/recall/F1, and report tables."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray          # [gold, pred]
    classes: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(golds, preds, k: int, classes: Sequence[str] | None = None) -> ConfusionMatrix:
    golds = np.asarray(golds, dtype=np.int64).reshape(-1)
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    if golds.shape != preds.shape:
        raise ValueError(f"golds and preds differ in length: {golds.size} vs {preds.size}")
    if golds.size and (golds.min() < 0 or preds.min() < 0 or golds.max() >= k or preds.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (golds, preds), 1)
    names = tuple(classes) if classes is not None else tuple(str(i) for i in range(k))
    return ConfusionMatrix(counts, names)


@dataclass(frozen=True)
class PRF:
    classes: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    def row(self, cls: str) -> tuple[float, float, float]:
        i = self.classes.index(cls)
        return float(self.precision[i]), float(self.recall[i]), float(self.f1[i])

    @property
    def total(self) -> tuple[float, float, float]:
        return self.weighted_precision, self.weighted_recall, self.weighted_f1


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


def prf(cm: ConfusionMatrix) -> PRF:
    """Per-class scores and their support-weighted averages (0/0 counts as 0).

    The weighted F1 averages per-class F1 values, so it need not lie between
    the weighted precision and weighted recall.
    """
    c = cm.counts.astype(float)
    tp = np.diag(c)
    support = c.sum(axis=1)
    precision = _ratio(tp, c.sum(axis=0))
    recall = _ratio(tp, support)
    f1 = _ratio(2 * precision * recall, precision + recall)
    n = support.sum()

    def wavg(v):
        return float((support * v).sum() / n) if n > 0 else 0.0

    return PRF(cm.classes, precision, recall, f1, support.astype(np.int64),
               wavg(precision), wavg(recall), wavg(f1))


def scores(golds, preds, classes: Sequence[str]) -> PRF:
    return prf(confusion(golds, preds, len(classes), classes))


def aggregate_folds(folds: Sequence[PRF]) -> PRF:
    """Unweighted mean of every reported number across folds."""
    if not folds:
        raise ValueError("aggregate_folds needs at least one fold")
    classes = folds[0].classes
    if any(f.classes != classes for f in folds):
        raise ValueError("all folds must share the same class list")

    def mean(attr):
        return np.mean([getattr(f, attr) for f in folds], axis=0)

    return PRF(classes, mean("precision"), mean("recall"), mean("f1"), mean("support"),
               float(mean("weighted_precision")), float(mean("weighted_recall")),
               float(mean("weighted_f1")))


# ---------------------------------------------------------------- report tables

def _fmt(x: float) -> str:
    return f"{x:.3f}"


def class_table(rows: Sequence[tuple[str, PRF]], classes: Sequence[str] | None = None) -> list[list[str]]:
    """Header plus one row per system: per-class P/R/F1 then the weighted Total."""
    classes = list(classes or rows[0][1].classes)
    header = ["Method"]
    for c in classes + ["Total"]:
        name = c.capitalize() if c != "Total" else c
        header += [f"{name} Prec.", f"{name} Rec.", f"{name} F1"]
    table = [header]
    for name, r in rows:
        line = [name]
        for c in classes:
            line += [_fmt(v) for v in r.row(c)]
        line += [_fmt(v) for v in r.total]
        table.append(line)
    return table


def single_table(rows: Sequence[tuple[str, tuple[float, float, float]]]) -> list[list[str]]:
    table = [["Model", "Prec.", "Rec.", "F1"]]
    for name, (p, r, f) in rows:
        table.append([name, _fmt(p), _fmt(r), _fmt(f)])
    return table


def to_tsv(table: list[list[str]]) -> str:
    return "".join("\t".join(row) + "\n" for row in table)


def to_text(table: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    lines = []
    for j, row in enumerate(table):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if j == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines) + "\n"
