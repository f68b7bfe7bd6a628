"""CharCNN, WordCNN and HybridCNN on top of :mod:`twostep.ndcore`.

Defaults are the published hyperparameters: a shallow CharCNN with two
width-4 x 1024 convolution stages, pool 3 and a 2048-unit hidden layer;
WordCNN filter widths 1-3 x 50 maps over frozen 300-d embeddings; and a
HybridCNN char channel of widths 3-5 x 50 maps next to the WordCNN channel.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import ndcore as nd
from .errors import ConfigError
from .textprep import PAD, EmbeddingTable

KINDS = ("charcnn", "wordcnn", "hybridcnn")


@dataclass
class ModelConfig:
    kind: str = "hybridcnn"
    n_classes: int = 3
    # CharCNN: (width, maps, pool) per conv stage
    char_stages: tuple = ((4, 1024, 3), (4, 1024, 3))
    fc_units: int = 2048
    # HybridCNN char channel
    char_widths: tuple = (3, 4, 5)
    char_maps: int = 50
    # WordCNN and HybridCNN word channel
    word_widths: tuple = (1, 2, 3)
    word_maps: int = 50
    dropout: float = 0.5
    l2: float = 1.0
    l2_scope: str = "output"
    embed_dim: int = 300
    char_length: int = 140
    word_length: int = 35
    alphabet_size: int = 70
    seed: int = 0

    def __post_init__(self):
        self.char_stages = tuple(tuple(int(v) for v in s) for s in self.char_stages)
        self.char_widths = tuple(int(w) for w in self.char_widths)
        self.word_widths = tuple(int(w) for w in self.word_widths)
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.n_classes not in (2, 3):
            raise ConfigError(f"n_classes must be 2 or 3, got {self.n_classes}")
        if self.l2_scope not in ("output", "weights"):
            raise ConfigError(f"l2_scope must be 'output' or 'weights', got {self.l2_scope!r}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.l2 < 0:
            raise ConfigError("l2 must be >= 0")
        sizes = [w for s in self.char_stages for w in s] + list(self.char_widths) + list(self.word_widths)
        sizes += [self.char_maps, self.word_maps, self.fc_units, self.embed_dim]
        if min(sizes) < 1:
            raise ConfigError("filter widths, map counts and layer sizes must be >= 1")
        if self.kind == "charcnn":
            self.char_stage_lengths()

    def char_stage_lengths(self) -> list[int]:
        """Sequence length after each conv and pool of the CharCNN stack."""
        lengths = []
        n = self.char_length
        for width, _, pool in self.char_stages:
            n = n - width + 1
            if n < pool:
                raise ConfigError(f"char_length {self.char_length} too short for CharCNN stages "
                                  f"{self.char_stages}")
            lengths.append(n)
            n = (n - pool) // pool + 1
            lengths.append(n)
        return lengths

    def to_dict(self) -> dict:
        d = asdict(self)
        d["char_stages"] = [list(s) for s in self.char_stages]
        d["char_widths"] = list(self.char_widths)
        d["word_widths"] = list(self.word_widths)
        return d


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _add_conv(store: nd.ParamStore, rng, name: str, width: int, d_in: int, maps: int):
    store.add(f"{name}.weight", glorot(rng, (width, d_in, maps), width * d_in, width * maps))
    store.add(f"{name}.bias", np.zeros(maps))


def _add_dense(store: nd.ParamStore, rng, name: str, n_in: int, n_out: int):
    store.add(f"{name}.weight", glorot(rng, (n_in, n_out), n_in, n_out))
    store.add(f"{name}.bias", np.zeros(n_out))


def _pad_ids(ids: np.ndarray, min_len: int, pad: int) -> np.ndarray:
    if ids.shape[1] >= min_len:
        return ids
    extra = np.full((ids.shape[0], min_len - ids.shape[1]), pad, dtype=ids.dtype)
    return np.concatenate([ids, extra], axis=1)


class Classifier:
    """Common surface of every trainable system: logits, loss and probabilities.

    ``inputs`` is a dict of per-example arrays (row i belongs to example i).
    """

    n_classes: int
    params: nd.ParamStore
    dropout_rate = 0.0

    def forward(self, inputs: dict, mode: str = "infer", rng=None) -> nd.Tensor:
        raise NotImplementedError

    def l2_filter(self, name: str) -> bool:
        return nd.is_weight(name)

    @property
    def l2_lambda(self) -> float:
        return 0.0

    def data_loss(self, logits: nd.Tensor, gold) -> nd.Tensor:
        loss, _ = nd.softmax_xent(logits, gold)
        return loss

    def loss(self, inputs: dict, gold, rng=None) -> nd.Tensor:
        logits = self.forward(inputs, mode="train", rng=rng)
        return nd.add_l2(self.data_loss(logits, gold), self.params, self.l2_lambda, self.l2_filter)

    def logits(self, inputs: dict, chunk: int = 256) -> np.ndarray:
        n = _num_rows(inputs)
        if n == 0:
            return np.zeros((0, self.n_classes))
        parts = [self.forward(take(inputs, np.arange(i, min(i + chunk, n)))).data
                 for i in range(0, n, chunk)]
        return np.concatenate(parts, axis=0)

    def predict_proba(self, inputs: dict) -> np.ndarray:
        return nd.softmax(self.logits(inputs))

    def eval_loss(self, inputs: dict, gold) -> float:
        gold = np.asarray(gold)
        if gold.size == 0:
            return float("nan")
        return float(self.data_loss(nd.Tensor(self.logits(inputs)), gold).data)


def _num_rows(inputs: dict) -> int:
    return next(iter(inputs.values())).shape[0]


def take(inputs: dict, idx) -> dict:
    idx = np.asarray(idx, dtype=np.int64)
    return {k: v[idx] for k, v in inputs.items()}


class CharCNN(Classifier):
    """One-hot characters -> [conv, relu, maxpool] x stages -> fc -> relu -> dropout -> softmax."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.n_classes = config.n_classes
        self.dropout_rate = config.dropout
        rng = np.random.default_rng(config.seed)
        self.params = nd.ParamStore()
        d_in = config.alphabet_size
        for i, (width, maps, _) in enumerate(config.char_stages):
            _add_conv(self.params, rng, f"conv{i + 1}", width, d_in, maps)
            d_in = maps
        flat = config.char_stage_lengths()[-1] * d_in
        _add_dense(self.params, rng, "fc", flat, config.fc_units)
        _add_dense(self.params, rng, "out", config.fc_units, config.n_classes)

    @property
    def l2_lambda(self):
        return self.config.l2

    def l2_filter(self, name):
        return name == "out.weight" if self.config.l2_scope == "output" else nd.is_weight(name)

    def forward(self, inputs, mode="infer", rng=None):
        p = self.params
        h = None
        for i, (_, _, pool) in enumerate(self.config.char_stages):
            w, b = p[f"conv{i + 1}.weight"], p[f"conv{i + 1}.bias"]
            if h is None:
                h = nd.conv1d_onehot(inputs["chars"], self.config.alphabet_size, w, b)
            else:
                h = nd.conv1d(h, w, b)
            h = nd.maxpool1d(nd.relu(h), pool, pool)
        h = nd.relu(nd.dense(nd.flatten(h), p["fc.weight"], p["fc.bias"]))
        h = nd.dropout(h, self.config.dropout, mode, rng)
        return nd.dense(h, p["out.weight"], p["out.bias"])


class _WordChannel:
    def _init_word(self, config: ModelConfig, embeddings: EmbeddingTable, rng):
        if embeddings.dim != config.embed_dim:
            raise ConfigError(f"embedding dim {embeddings.dim} does not match configured {config.embed_dim}")
        self.params.add("embedding.table", embeddings.vectors, trainable=embeddings.trainable)
        for w in config.word_widths:
            _add_conv(self.params, rng, f"word.conv{w}", w, config.embed_dim, config.word_maps)

    def _word_features(self, ids: np.ndarray) -> list[nd.Tensor]:
        p = self.params
        ids = _pad_ids(ids, max(self.config.word_widths), PAD)
        e = nd.gather(p["embedding.table"], ids)
        return [nd.global_maxpool(nd.relu(nd.conv1d(e, p[f"word.conv{w}.weight"], p[f"word.conv{w}.bias"])))
                for w in self.config.word_widths]

    def embedding_digest(self) -> str:
        return self.params.digest("embedding.table")


class WordCNN(_WordChannel, Classifier):
    """Frozen embeddings -> parallel convs -> relu -> 1-max pool -> concat -> dropout -> softmax."""

    def __init__(self, config: ModelConfig, embeddings: EmbeddingTable):
        self.config = config
        self.n_classes = config.n_classes
        self.dropout_rate = config.dropout
        rng = np.random.default_rng(config.seed)
        self.params = nd.ParamStore()
        self._init_word(config, embeddings, rng)
        _add_dense(self.params, rng, "out", len(config.word_widths) * config.word_maps, config.n_classes)

    @property
    def l2_lambda(self):
        return self.config.l2

    def l2_filter(self, name):
        return name == "out.weight" if self.config.l2_scope == "output" else nd.is_weight(name)

    def features(self, inputs) -> nd.Tensor:
        return nd.concat(self._word_features(inputs["words"]), axis=-1)

    def forward(self, inputs, mode="infer", rng=None):
        h = nd.dropout(self.features(inputs), self.config.dropout, mode, rng)
        return nd.dense(h, self.params["out.weight"], self.params["out.bias"])


class HybridCNN(_WordChannel, Classifier):
    """Char and word channels, each 1-max pooled, concatenated before one softmax layer."""

    def __init__(self, config: ModelConfig, embeddings: EmbeddingTable):
        self.config = config
        self.n_classes = config.n_classes
        self.dropout_rate = config.dropout
        rng = np.random.default_rng(config.seed)
        self.params = nd.ParamStore()
        for w in config.char_widths:
            _add_conv(self.params, rng, f"char.conv{w}", w, config.alphabet_size, config.char_maps)
        self._init_word(config, embeddings, rng)
        width = len(config.char_widths) * config.char_maps + len(config.word_widths) * config.word_maps
        _add_dense(self.params, rng, "out", width, config.n_classes)

    @property
    def l2_lambda(self):
        return self.config.l2

    def l2_filter(self, name):
        return name == "out.weight" if self.config.l2_scope == "output" else nd.is_weight(name)

    def features(self, inputs) -> nd.Tensor:
        p = self.params
        chars = _pad_ids(inputs["chars"], max(self.config.char_widths), self.config.alphabet_size)
        depth = self.config.alphabet_size
        char_feats = [nd.global_maxpool(nd.relu(
            nd.conv1d_onehot(chars, depth, p[f"char.conv{w}.weight"], p[f"char.conv{w}.bias"])))
            for w in self.config.char_widths]
        return nd.concat(char_feats + self._word_features(inputs["words"]), axis=-1)

    def forward(self, inputs, mode="infer", rng=None):
        h = nd.dropout(self.features(inputs), self.config.dropout, mode, rng)
        return nd.dense(h, self.params["out.weight"], self.params["out.bias"])


def build_model(config: ModelConfig, embeddings: EmbeddingTable | None = None) -> Classifier:
    if config.kind == "charcnn":
        return CharCNN(config)
    if embeddings is None:
        raise ConfigError(f"{config.kind} needs an embedding table")
    if config.kind == "wordcnn":
        return WordCNN(config, embeddings)
    return HybridCNN(config, embeddings)
