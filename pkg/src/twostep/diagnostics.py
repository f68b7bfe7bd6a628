"""Harness self-checks: finite-difference gradients at reduced size and the overfit test."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import ndcore as nd
from .baselines import FastText, FastTextConfig, LinearModel
from .corpus import SynthSpec, synth_corpus, corpus_share_sizes
from .models import ModelConfig, build_model
from .pipeline import PipelineSpec, run
from .systems import make_system
from .textprep import EmbeddingTable
from .train import train_steps

GRADCHECK_KINDS = ("charcnn", "wordcnn", "hybridcnn", "lr", "svm", "fasttext")
TOLERANCE = 1e-4

# small enough to check in seconds, large enough to exercise every op
REDUCED = {
    "charcnn": dict(char_length=20, char_stages=((3, 6, 2), (3, 6, 2)), fc_units=12),
    "wordcnn": dict(word_length=7, embed_dim=8, word_maps=4),
    "hybridcnn": dict(char_length=12, char_maps=4, word_length=7, embed_dim=8, word_maps=4),
}
VOCAB = 24
BATCH = 5


def reduced_model(kind: str, n_classes: int = 3, seed: int = 0):
    """A small model of ``kind`` with a matching random input batch and labels.

    Inputs avoid padding symbols and all biases are randomized, so no unit
    sits exactly on a relu kink or a pooling tie.
    """
    rng = np.random.default_rng(seed)
    gold = np.arange(BATCH) % n_classes
    if kind in ("lr", "svm"):
        x = sp.random(BATCH, 30, density=0.3, random_state=seed, format="csr") * 3.0
        model = LinearModel(30, n_classes, "xent" if kind == "lr" else "sq_hinge", lam=0.05, C=0.5,
                            n_train=BATCH, seed=seed)
        model.params["linear.weight"].data[...] = rng.normal(0, 0.5, size=(30, n_classes))
        return model, {"ngrams": x}, gold
    if kind == "fasttext":
        model = FastText(VOCAB, n_classes, FastTextConfig(dim=6, max_len=7, seed=seed))
        ids = rng.integers(2, VOCAB, size=(BATCH, 7))
        ids[:, 5:] = 0                      # trailing padding exercises the mask
        return model, {"tokens": ids}, gold

    opts = dict(REDUCED[kind], kind=kind, n_classes=n_classes, dropout=0.5, l2=0.01, l2_scope="weights",
                seed=seed)
    config = ModelConfig(**opts)
    emb = None
    if kind != "charcnn":
        table = rng.normal(0, 0.5, size=(VOCAB, config.embed_dim))
        table[0] = 0.0
        emb = EmbeddingTable(table, trainable=False)
    model = build_model(config, emb)
    for name in model.params.trainable_names():
        if name.endswith(".bias"):
            model.params[name].data[...] = rng.normal(0, 0.1, size=model.params[name].shape)
    inputs = {"chars": rng.integers(0, config.alphabet_size, size=(BATCH, config.char_length))}
    if kind != "charcnn":
        inputs["words"] = rng.integers(2, VOCAB, size=(BATCH, config.word_length))
    return model, inputs, gold


def gradcheck_kind(kind: str, n_coords: int = 20, seed: int = 0, inject_bug: bool = False) -> dict[str, float]:
    """Per-tensor max relative error for one system's full training loss.

    The loss includes dropout (with a mask fixed by ``seed``) and the L2
    penalty. ``inject_bug`` flips the sign of the dense-layer backward so the
    harness itself can be shown to fail.
    """
    model, inputs, gold = reduced_model(kind, seed=seed)

    def loss_fn():
        return model.loss(inputs, gold, rng=np.random.default_rng(seed + 1))

    if inject_bug:
        with nd.corrupt_backward("dense"):
            return nd.grad_check_tensors(loss_fn, model.params, n_coords=n_coords, seed=seed)
    return nd.grad_check_tensors(loss_fn, model.params, n_coords=n_coords, seed=seed)


def overfit_corpus(n: int = 32, seed: int = 0):
    """A small separable three-class corpus in the class shares of the real corpus."""
    return synth_corpus(SynthSpec(sizes=corpus_share_sizes(n)), seed=seed)


def overfit(kind: str, corpus, settings=None, max_batches: int = 500, check_every: int = 5):
    """Train ``kind`` on ``corpus`` with balanced batches until it fits every example.

    Returns ``(batches used, final training accuracy, fitted system)``.
    Accuracy is measured in inference mode (no dropout) every
    ``check_every`` batches.
    """
    system = make_system(kind, corpus.schema, settings)
    system.prepare(corpus)
    inputs, gold = system.encode(corpus), corpus.label_ids()
    state = {"calls": 0}

    def fitted(model):
        state["calls"] += 1
        return state["calls"] % check_every == 0 and bool((model.logits(inputs).argmax(axis=1) == gold).all())

    steps = train_steps(system.model, inputs, gold, max_batches, system.settings.train, stop_when=fitted)
    acc = float((system.model.logits(inputs).argmax(axis=1) == gold).mean())
    return steps, acc, system


def desk_experiment(n: int = 2000, k: int = 5, seed: int = 0, settings=None):
    """Cross-validated one-step HybridCNN and two-step LR+LR on a synthetic corpus.

    The corpus has ``n`` examples in the class shares of the real corpus. Returns the two
    :class:`~twostep.pipeline.ExperimentResult` objects.
    """
    corpus = synth_corpus(SynthSpec(sizes=corpus_share_sizes(n)), seed=seed)
    one = run(PipelineSpec("one_step", "hybridcnn", k=k, seed=seed), corpus, settings)
    two = run(PipelineSpec("two_step", "lr", "lr", k=k, seed=seed), corpus, settings)
    return one, two
