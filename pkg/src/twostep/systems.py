"""Trainable systems behind one interface: fit on a corpus, predict class probabilities.

A system owns everything fitted on its training split (vocabulary, unigram
model, n-gram map, embeddings) so that test texts can never leak into them.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .baselines import FastText, FastTextConfig, LinearModel, NgramFeatureMap, fasttext_ids
from .corpus import LabeledCorpus, Schema, get_schema
from .errors import ConfigError
from .models import ModelConfig, build_model
from .textprep import (EmbeddingTable, TextConfig, TextEncoder, load_embeddings, load_unigram_counts,
                       random_embeddings)
from .train import TrainConfig, TrainReport, train

SYSTEM_KINDS = ("lr", "svm", "fasttext", "charcnn", "wordcnn", "hybridcnn")
DISPLAY_NAMES = {"lr": "LR", "svm": "SVM", "fasttext": "FastText", "charcnn": "CharCNN",
                 "wordcnn": "WordCNN", "hybridcnn": "HybridCNN"}


@dataclass
class SystemSettings:
    text: TextConfig = field(default_factory=TextConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: dict = field(default_factory=dict)       # ModelConfig overrides
    lr_lambda: float = 1e-4
    svm_C: float = 1.0
    ngram_min: int = 1
    ngram_max: int = 4
    ngram_min_df: int = 2
    fasttext: FastTextConfig = field(default_factory=FastTextConfig)
    embeddings: str | None = None
    unigram_counts: str | None = None

    def with_seed(self, seed: int) -> "SystemSettings":
        return dataclasses.replace(self, train=dataclasses.replace(self.train, seed=seed),
                                   fasttext=dataclasses.replace(self.fasttext, seed=seed))

    def to_dict(self) -> dict:
        return {
            "text": vars(self.text).copy(), "train": vars(self.train).copy(), "model": dict(self.model),
            "lr_lambda": self.lr_lambda, "svm_C": self.svm_C, "ngram_min": self.ngram_min,
            "ngram_max": self.ngram_max, "ngram_min_df": self.ngram_min_df,
            "fasttext": vars(self.fasttext).copy(), "embeddings": self.embeddings,
            "unigram_counts": self.unigram_counts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSettings":
        d = dict(d)
        return cls(text=TextConfig(**d.pop("text")), train=TrainConfig(**d.pop("train")),
                   fasttext=FastTextConfig(**d.pop("fasttext")), **d)


class System:
    kind: str
    schema: Schema
    model = None
    report: TrainReport | None = None

    def prepare(self, corpus: LabeledCorpus):
        """Fit the text artifacts on ``corpus`` and build an untrained model."""
        raise NotImplementedError

    def fit(self, corpus: LabeledCorpus) -> TrainReport:
        self._check_schema(corpus)
        self.prepare(corpus)
        self.model, self.report = train(self.model, self.encode(corpus), corpus.label_ids(), self.settings.train)
        return self.report

    def encode(self, corpus: LabeledCorpus) -> dict:
        raise NotImplementedError

    def predict_proba(self, corpus: LabeledCorpus) -> np.ndarray:
        if len(corpus) == 0:
            return np.zeros((0, len(self.schema)))
        return self.model.predict_proba(self.encode(corpus))

    def predict(self, corpus: LabeledCorpus) -> list[str]:
        return [self.schema.labels[i] for i in self.predict_proba(corpus).argmax(axis=1)]

    def digests(self) -> dict[str, str]:
        return {}

    def _check_schema(self, corpus):
        if corpus.schema != self.schema:
            raise ConfigError(f"{self.kind} system was built for schema {self.schema.name}, "
                              f"got {corpus.schema.name}")


class NeuralSystem(System):
    def __init__(self, kind: str, schema: Schema, settings: SystemSettings):
        self.kind, self.schema, self.settings = kind, schema, settings
        self.encoder = TextEncoder(settings.text)
        self.config = self._model_config()
        self.model = None

    def _model_config(self) -> ModelConfig:
        opts = dict(kind=self.kind, n_classes=len(self.schema), char_length=self.settings.text.char_length,
                    word_length=self.settings.text.word_length, seed=self.settings.train.seed)
        opts.update(self.settings.model)
        return ModelConfig(**opts)

    def _embeddings(self) -> EmbeddingTable | None:
        if self.kind == "charcnn":
            return None
        if self.settings.embeddings:
            return load_embeddings(self.settings.embeddings, self.encoder.vocab, self.config.embed_dim)
        return random_embeddings(self.encoder.vocab, self.config.embed_dim, seed=0)

    def prepare(self, corpus):
        extra = load_unigram_counts(self.settings.unigram_counts) if self.settings.unigram_counts else None
        self.encoder.fit(corpus.texts, extra)
        self.model = build_model(self.config, self._embeddings())
        return self.model

    def encode(self, corpus):
        out = {"chars": self.encoder.encode_chars(corpus.texts)}
        if self.kind != "charcnn":
            out["words"] = self.encoder.encode_words(corpus.texts)
        return out

    def digests(self):
        d = self.encoder.digests()
        if self.model is not None and "embedding.table" in self.model.params:
            d["embedding"] = self.model.params.digest("embedding.table")
        return d


class LinearSystem(System):
    def __init__(self, kind: str, schema: Schema, settings: SystemSettings):
        self.kind, self.schema, self.settings = kind, schema, settings
        self.features = NgramFeatureMap(settings.ngram_min, settings.ngram_max, settings.ngram_min_df)
        self.model = None

    def _linear(self, n_train: int) -> LinearModel:
        loss = "xent" if self.kind == "lr" else "sq_hinge"
        return LinearModel(len(self.features), len(self.schema), loss, lam=self.settings.lr_lambda,
                           C=self.settings.svm_C, n_train=n_train, seed=self.settings.train.seed)

    def prepare(self, corpus):
        self.features.fit(corpus.texts)
        self.model = self._linear(len(corpus))
        return self.model

    def encode(self, corpus):
        return {"ngrams": self.features.transform(corpus.texts)}

    def digests(self):
        return {"ngram_map": self.features.digest()}


class FastTextSystem(System):
    def __init__(self, kind: str, schema: Schema, settings: SystemSettings):
        self.kind, self.schema, self.settings = kind, schema, settings
        self.encoder = TextEncoder(settings.text)
        self.model = None

    def prepare(self, corpus):
        self.encoder.fit(corpus.texts)
        self.model = FastText(len(self.encoder.vocab), len(self.schema), self.settings.fasttext)
        return self.model

    def encode(self, corpus):
        rows = [fasttext_ids(self.encoder.words(t), self.encoder.vocab, self.settings.fasttext)
                for t in corpus.texts]
        width = self.settings.fasttext.max_len * (2 if self.settings.fasttext.bigrams else 1)
        return {"tokens": np.stack(rows) if rows else np.zeros((0, width), dtype=np.int64)}

    def digests(self):
        return self.encoder.digests()


class FixedSystem(System):
    """Non-learning system for harness checks: a gold-label oracle or a constant predictor."""

    def __init__(self, schema: Schema, answers: dict[str, str] | None = None, constant: str | None = None,
                 kind: str = "fixed"):
        self.kind, self.schema = kind, schema
        self.answers, self.constant = answers, constant

    def fit(self, corpus):
        self._check_schema(corpus)
        self.report = TrainReport()
        return self.report

    def predict_proba(self, corpus):
        k = len(self.schema)
        out = np.full((len(corpus), k), 1.0 / k)
        for i, e in enumerate(corpus):
            label = self.constant if self.answers is None else self.answers.get(e.id)
            if label in self.schema:
                out[i] = 0.0
                out[i, self.schema.index(label)] = 1.0
        return out


def make_system(kind: str, schema: Schema | str, settings: SystemSettings | None = None) -> System:
    schema = get_schema(schema)
    settings = settings or SystemSettings()
    if kind in ("charcnn", "wordcnn", "hybridcnn"):
        return NeuralSystem(kind, schema, settings)
    if kind in ("lr", "svm"):
        return LinearSystem(kind, schema, settings)
    if kind == "fasttext":
        return FastTextSystem(kind, schema, settings)
    raise ConfigError(f"unknown system {kind!r}; expected one of {SYSTEM_KINDS}")


def export_system(system: System) -> tuple[dict, dict[str, np.ndarray]]:
    """Header fields and parameter tensors needed to rebuild a fitted system."""
    if system.model is None:
        raise ConfigError("system has not been fitted")
    header = {"kind": system.kind, "schema": system.schema.name, "settings": system.settings.to_dict()}
    if isinstance(system, NeuralSystem):
        header["model_config"] = system.config.to_dict()
        header["encoder"] = system.encoder.state()
    elif isinstance(system, LinearSystem):
        header["features"] = system.features.state()
        header["n_train"] = system.model.n_train
    elif isinstance(system, FastTextSystem):
        header["encoder"] = system.encoder.state()
    return header, system.model.params.state()


def import_system(header: dict, tensors: dict[str, np.ndarray]) -> System:
    kind = header["kind"]
    settings = SystemSettings.from_dict(header["settings"])
    system = make_system(kind, header["schema"], settings)
    if isinstance(system, NeuralSystem):
        system.config = ModelConfig(**header["model_config"])
        system.encoder = TextEncoder.from_state(header["encoder"])
        emb = None
        if kind != "charcnn":
            table = tensors["embedding.table"]
            emb = EmbeddingTable(np.zeros_like(table), trainable=False)
        system.model = build_model(system.config, emb)
    elif isinstance(system, LinearSystem):
        system.features = NgramFeatureMap.from_state(header["features"])
        system.model = system._linear(header["n_train"])
    elif isinstance(system, FastTextSystem):
        system.encoder = TextEncoder.from_state(header["encoder"])
        system.model = FastText(len(system.encoder.vocab), len(system.schema), settings.fasttext)
    system.model.params.load_state(tensors)
    return system
