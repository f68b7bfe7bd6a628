"""Mini-batch Adam training over balanced batches with early stopping."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ndcore as nd
from .corpus import balanced_index_batches, stratified_split
from .errors import ConfigError, DataError, NumericError
from .metrics import scores
from .models import Classifier, take


@dataclass
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3
    eval_fraction: float = 0.1
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if not 0 < self.eval_fraction < 0.5:
            raise ConfigError("eval_fraction must lie in (0, 0.5)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")

    def adam(self) -> nd.AdamHyper:
        return nd.AdamHyper(self.lr, self.beta1, self.beta2, self.eps)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    eval_loss: list[float] = field(default_factory=list)
    eval_f1: list[float] = field(default_factory=list)
    best_epoch: int = 0
    total_batches: int = 0


class EarlyStopping:
    """Stop after ``patience`` consecutive evaluations without a new minimum."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.bad = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record one evaluation; returns True when it is the new best."""
        if loss < self.best:
            self.best, self.best_epoch, self.bad = loss, epoch, 0
            return True
        self.bad += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad >= self.patience


def sgd_step(model: Classifier, inputs: dict, gold: np.ndarray, hyper: nd.AdamHyper,
             rng: np.random.Generator) -> float:
    loss = model.loss(inputs, gold, rng)
    value = float(loss.data)
    if not math.isfinite(value):
        raise NumericError(f"non-finite training loss {value}")
    nd.backward(loss, model.params)
    nd.adam_step(model.params, hyper)
    return value


def _diagnose(model, epoch, batch, err) -> NumericError:
    try:
        norms = nd.check_finite(model.params)
        detail = ", ".join(f"{k}={v:.3g}" for k, v in norms.items())
    except NumericError as inner:
        detail = str(inner)
    return NumericError(f"epoch {epoch}, batch {batch}: {err}; parameter norms: {detail}")


def train_steps(model: Classifier, inputs: dict, labels, n_batches: int, config: TrainConfig | None = None,
                stop_when=None) -> int:
    """Run up to ``n_batches`` balanced Adam steps on all of ``inputs``.

    ``stop_when(model)`` is checked after every step; returns the number of
    steps taken.
    """
    config = config or TrainConfig()
    labels = np.asarray(labels, dtype=np.int64)
    hyper = config.adam()
    rng = np.random.default_rng(config.seed)
    batches = balanced_index_batches(labels, model.n_classes, config.batch_size, config.seed)
    for step in range(1, n_batches + 1):
        idx = np.asarray(next(batches).indices)
        try:
            sgd_step(model, take(inputs, idx), labels[idx], hyper, rng)
        except NumericError as err:
            raise _diagnose(model, 1, step, err) from None
        if stop_when is not None and stop_when(model):
            return step
    return n_batches


def train(model: Classifier, inputs: dict, labels, config: TrainConfig | None = None):
    """Train with early stopping on a stratified held-out slice of the training data.

    One epoch is ``ceil(N / batch_size)`` balanced batches, N being the
    examples left after holding out ``eval_fraction``. The parameters of the
    epoch with the lowest held-out loss are restored before returning.
    """
    config = config or TrainConfig()
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise DataError("cannot train on an empty view")
    if np.unique(labels).size < 2:
        raise DataError("training data needs at least two classes")
    kept, held = stratified_split(labels, config.eval_fraction, config.seed)
    train_in, train_y = take(inputs, kept), labels[kept]
    eval_in, eval_y = take(inputs, held), labels[held]

    hyper = config.adam()
    rng = np.random.default_rng(config.seed)
    batches = balanced_index_batches(train_y, model.n_classes, config.batch_size, config.seed)
    steps_per_epoch = math.ceil(train_y.size / config.batch_size)
    report = TrainReport()
    stopper = EarlyStopping(config.patience)
    best_state = model.params.state()

    for epoch in range(1, config.max_epochs + 1):
        losses = []
        for step in range(1, steps_per_epoch + 1):
            idx = np.asarray(next(batches).indices)
            try:
                losses.append(sgd_step(model, take(train_in, idx), train_y[idx], hyper, rng))
            except NumericError as err:
                raise _diagnose(model, epoch, step, err) from None
            report.total_batches += 1
        report.train_loss.append(float(np.mean(losses)))
        if eval_y.size:
            probs = model.predict_proba(eval_in)
            ev = model.eval_loss(eval_in, eval_y)
            f1 = scores(eval_y, probs.argmax(axis=1), [str(c) for c in range(model.n_classes)]).weighted_f1
        else:
            ev, f1 = report.train_loss[-1], float("nan")
        report.eval_loss.append(ev)
        report.eval_f1.append(f1)
        if stopper.update(epoch, ev):
            best_state = model.params.state()
        if stopper.should_stop:
            break
    model.params.load_state(best_state)
    report.best_epoch = stopper.best_epoch
    return model, report
