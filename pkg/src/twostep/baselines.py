"""Linear baselines: char n-gram logistic regression and SVM, and a FastText-style classifier."""
from __future__ import annotations

import hashlib
import zlib
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import ndcore as nd
from .errors import DataError
from .models import Classifier, glorot
from .textprep import ALPHABET, PAD, CharAlphabet, Vocab
from .train import TrainConfig, train_steps


def normalize_chars(text: str, alphabet: CharAlphabet = ALPHABET) -> str:
    """The text as the character quantizer sees it: lowercased, off-alphabet symbols removed."""
    return "".join(ch for ch in text.lower() if ch in alphabet.index)


def char_ngrams(text: str, n_min: int = 1, n_max: int = 4) -> Counter:
    s = normalize_chars(text)
    grams = Counter()
    for n in range(n_min, n_max + 1):
        for i in range(len(s) - n + 1):
            grams[s[i:i + n]] += 1
    return grams


@dataclass(frozen=True)
class SparseVec:
    indices: np.ndarray
    counts: np.ndarray
    dim: int


class NgramFeatureMap:
    """Character n-gram index fitted on training texts only."""

    def __init__(self, n_min: int = 1, n_max: int = 4, min_df: int = 2):
        self.n_min, self.n_max, self.min_df = n_min, n_max, min_df
        self.index: dict[str, int] = {}

    def fit(self, texts: Sequence[str]) -> "NgramFeatureMap":
        df = Counter()
        for t in texts:
            df.update(char_ngrams(t, self.n_min, self.n_max).keys())
        kept = sorted(g for g, c in df.items() if c >= self.min_df)
        self.index = {g: i for i, g in enumerate(kept)}
        return self

    def __len__(self):
        return len(self.index)

    def vector(self, text: str) -> SparseVec:
        grams = char_ngrams(text, self.n_min, self.n_max)
        pairs = sorted((self.index[g], c) for g, c in grams.items() if g in self.index)
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        cnt = np.array([p[1] for p in pairs], dtype=np.float64)
        return SparseVec(idx, cnt, len(self.index))

    def transform(self, texts: Sequence[str]) -> sp.csr_matrix:
        indptr, indices, data = [0], [], []
        for t in texts:
            v = self.vector(t)
            indices.extend(v.indices.tolist())
            data.extend(v.counts.tolist())
            indptr.append(len(indices))
        return sp.csr_matrix((np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
                              np.asarray(indptr, dtype=np.int64)), shape=(len(texts), len(self.index)))

    def digest(self) -> str:
        h = hashlib.sha256(f"{self.n_min},{self.n_max},{self.min_df}".encode())
        for g in sorted(self.index, key=self.index.get):
            h.update(g.encode("utf-8") + b"\x00")
        return h.hexdigest()

    def state(self) -> dict:
        return {"n_min": self.n_min, "n_max": self.n_max, "min_df": self.min_df,
                "grams": sorted(self.index, key=self.index.get)}

    @classmethod
    def from_state(cls, state: dict) -> "NgramFeatureMap":
        fm = cls(state["n_min"], state["n_max"], state["min_df"])
        fm.index = {g: i for i, g in enumerate(state["grams"])}
        return fm


def char_ngram_features(text: str, feature_map: NgramFeatureMap) -> SparseVec:
    return feature_map.vector(text)


class LinearModel(Classifier):
    """Linear scores over a sparse feature matrix stored under ``inputs['ngrams']``.

    ``loss_kind`` is ``"xent"`` (multinomial logistic regression with penalty
    ``lam * ||W||^2``) or ``"sq_hinge"`` (one-vs-rest squared-hinge SVM, whose
    per-example objective is ``||W||^2 / (2 C n) + sum_k hinge^2``).
    """

    def __init__(self, n_features: int, n_classes: int, loss_kind: str = "xent", lam: float = 1e-4,
                 C: float = 1.0, n_train: int = 1, seed: int = 0):
        if loss_kind not in ("xent", "sq_hinge"):
            raise ValueError(f"unknown loss kind {loss_kind!r}")
        self.n_classes = n_classes
        self.loss_kind = loss_kind
        self.lam, self.C, self.n_train = lam, C, n_train
        rng = np.random.default_rng(seed)
        self.params = nd.ParamStore()
        self.params.add("linear.weight", glorot(rng, (n_features, n_classes), n_features, n_classes) * 0.01)
        self.params.add("linear.bias", np.zeros(n_classes))

    @property
    def l2_lambda(self):
        if self.loss_kind == "xent":
            return self.lam
        return 1.0 / (2.0 * self.C * max(self.n_train, 1))

    def forward(self, inputs, mode="infer", rng=None):
        return nd.sparse_dense(inputs["ngrams"], self.params["linear.weight"], self.params["linear.bias"])

    def data_loss(self, logits, gold):
        if self.loss_kind == "sq_hinge":
            return nd.squared_hinge(logits, gold)
        return super().data_loss(logits, gold)

    def margins(self, inputs) -> np.ndarray:
        return self.logits(inputs)


def _check_labels(labels, n_classes=None):
    labels = np.asarray(labels, dtype=np.int64)
    if np.unique(labels).size < 2:
        raise DataError("need at least two classes to train a classifier")
    return labels, int(n_classes or labels.max() + 1)


def train_logreg(features: sp.csr_matrix, labels, lam: float = 1e-4, epochs: int = 10,
                 n_classes: int | None = None, config: TrainConfig | None = None) -> LinearModel:
    """Softmax regression by Adam over balanced batches for a fixed number of epochs."""
    labels, k = _check_labels(labels, n_classes)
    config = config or TrainConfig()
    model = LinearModel(features.shape[1], k, "xent", lam=lam, seed=config.seed)
    steps = epochs * int(np.ceil(labels.size / config.batch_size))
    train_steps(model, {"ngrams": sp.csr_matrix(features)}, labels, steps, config)
    return model


def train_svm(features: sp.csr_matrix, labels, C: float = 1.0, epochs: int = 10,
              n_classes: int | None = None, config: TrainConfig | None = None) -> LinearModel:
    """One-vs-rest squared-hinge linear SVM by Adam over balanced batches."""
    labels, k = _check_labels(labels, n_classes)
    config = config or TrainConfig()
    model = LinearModel(features.shape[1], k, "sq_hinge", C=C, n_train=labels.size, seed=config.seed)
    steps = epochs * int(np.ceil(labels.size / config.batch_size))
    train_steps(model, {"ngrams": sp.csr_matrix(features)}, labels, steps, config)
    return model


# ---------------------------------------------------------------- FastText

@dataclass
class FastTextConfig:
    dim: int = 100
    bigrams: bool = False
    buckets: int = 2 ** 18
    max_len: int = 64
    seed: int = 0


def bigram_bucket(a: str, b: str, buckets: int) -> int:
    return zlib.crc32(f"{a} {b}".encode("utf-8")) % buckets


def fasttext_ids(tokens: Sequence[str], vocab: Vocab, config: FastTextConfig) -> np.ndarray:
    """Token ids (plus hashed bigram ids when enabled), PAD-extended to a fixed width."""
    ids = [vocab.lookup(t) for t in tokens][:config.max_len]
    if config.bigrams:
        ids += [len(vocab) + bigram_bucket(a, b, config.buckets)
                for a, b in zip(tokens[:config.max_len], tokens[1:config.max_len])]
    width = 2 * config.max_len if config.bigrams else config.max_len
    out = np.full(width, PAD, dtype=np.int64)
    out[:len(ids)] = ids
    return out


class FastText(Classifier):
    """Averaged trainable token embeddings followed by a single linear layer."""

    def __init__(self, vocab_size: int, n_classes: int, config: FastTextConfig | None = None):
        self.config = config or FastTextConfig()
        self.n_classes = n_classes
        rows = vocab_size + (self.config.buckets if self.config.bigrams else 0)
        rng = np.random.default_rng(self.config.seed)
        d = self.config.dim
        table = rng.uniform(-1.0 / d, 1.0 / d, size=(rows, d))
        table[PAD] = 0.0
        self.params = nd.ParamStore()
        self.params.add("embed.table", table)
        self.params.add("out.weight", glorot(rng, (d, n_classes), d, n_classes))
        self.params.add("out.bias", np.zeros(n_classes))

    def forward(self, inputs, mode="infer", rng=None):
        ids = inputs["tokens"]
        e = nd.gather(self.params["embed.table"], ids)
        h = nd.masked_mean(e, ids != PAD)
        return nd.dense(h, self.params["out.weight"], self.params["out.bias"])


def fasttext_classify(tokens: Sequence[str], model: FastText, vocab: Vocab) -> np.ndarray:
    """Logits for one token list."""
    ids = fasttext_ids(tokens, vocab, model.config)[None, :]
    return model.forward({"tokens": ids}).data[0]
