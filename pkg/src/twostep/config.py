"""Flat ``key = value`` run configuration shared by the CLI commands.

Blank lines and lines starting with ``#`` are ignored. Unknown keys are
rejected, values are parsed by the type of the matching default, and
referenced input paths must exist. Tuple-valued keys take comma-separated
integers; ``char_stages`` takes ``width:maps:pool`` triples separated by
commas.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .baselines import FastTextConfig
from .errors import ConfigError
from .models import ModelConfig
from .pipeline import PipelineSpec
from .systems import SYSTEM_KINDS, SystemSettings
from .textprep import TextConfig
from .train import TrainConfig

# ModelConfig fields a user may set; kind, n_classes and lengths are derived
MODEL_KEYS = ("char_stages", "fc_units", "char_widths", "char_maps", "word_widths", "word_maps", "dropout",
              "l2", "l2_scope", "embed_dim")
PATH_KEYS = ("dataset", "embeddings", "unigram_counts")


@dataclass
class RunConfig:
    dataset: str | None = None
    embeddings: str | None = None
    unigram_counts: str | None = None
    out: str = "results"
    mode: str = "one_step"
    model: str = "hybridcnn"
    step1: str | None = None
    step2: str | None = None
    folds: int = 10
    seed: int = 0
    threshold: float = 0.5
    # training
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3
    eval_fraction: float = 0.1
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # text
    char_length: int = 140
    word_length: int = 35
    min_freq: int = 1
    segment_hashtags: bool = True
    # neural models
    char_stages: tuple = ((4, 1024, 3), (4, 1024, 3))
    fc_units: int = 2048
    char_widths: tuple = (3, 4, 5)
    char_maps: int = 50
    word_widths: tuple = (1, 2, 3)
    word_maps: int = 50
    dropout: float = 0.5
    l2: float = 1.0
    l2_scope: str = "output"
    embed_dim: int = 300
    # baselines
    lr_lambda: float = 1e-4
    svm_C: float = 1.0
    ngram_min: int = 1
    ngram_max: int = 4
    ngram_min_df: int = 2
    fasttext_dim: int = 100
    fasttext_bigrams: bool = False
    fasttext_buckets: int = 2 ** 18
    fasttext_max_len: int = 64

    def validate(self) -> "RunConfig":
        for key in PATH_KEYS:
            value = getattr(self, key)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{key}: no such file: {value}")
        for key in ("model", "step1", "step2"):
            value = getattr(self, key)
            if value is not None and value not in SYSTEM_KINDS:
                raise ConfigError(f"{key}: unknown system {value!r}; expected one of {', '.join(SYSTEM_KINDS)}")
        if self.mode not in ("one_step", "two_step"):
            raise ConfigError(f"mode must be one_step or two_step, got {self.mode!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        self.settings()   # dataclass validation of every section
        return self

    def pipeline_spec(self, mode: str | None = None) -> PipelineSpec:
        mode = mode or self.mode
        if mode == "one_step":
            return PipelineSpec("one_step", self.step1 or self.model, None, self.folds, self.seed, self.threshold)
        step1 = self.step1 or self.model
        return PipelineSpec("two_step", step1, self.step2 or step1, self.folds, self.seed, self.threshold)

    def settings(self) -> SystemSettings:
        model = {k: getattr(self, k) for k in MODEL_KEYS}
        ModelConfig(kind="hybridcnn", **model)
        return SystemSettings(
            text=TextConfig(self.char_length, self.word_length, self.min_freq, self.segment_hashtags),
            train=TrainConfig(self.batch_size, self.max_epochs, self.patience, self.eval_fraction, self.seed,
                              self.lr, self.beta1, self.beta2, self.eps),
            model=model, lr_lambda=self.lr_lambda, svm_C=self.svm_C, ngram_min=self.ngram_min,
            ngram_max=self.ngram_max, ngram_min_df=self.ngram_min_df,
            fasttext=FastTextConfig(self.fasttext_dim, self.fasttext_bigrams, self.fasttext_buckets,
                                    self.fasttext_max_len, self.seed),
            embeddings=self.embeddings, unigram_counts=self.unigram_counts)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_OPTIONAL_STR = {"dataset", "embeddings", "unigram_counts", "step1", "step2"}


def _parse_bool(key: str, text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def parse_value(key: str, text: str):
    """Convert ``text`` to the type of ``RunConfig.<key>``."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    default = _FIELDS[key].default
    try:
        if key in _OPTIONAL_STR or isinstance(default, str):
            return None if key in _OPTIONAL_STR and text.lower() in ("", "none") else text
        if isinstance(default, bool):
            return _parse_bool(key, text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if key == "char_stages":
            return tuple(tuple(int(v) for v in item.split(":")) for item in text.split(","))
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    values = {}
    for n, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            values[key] = parse_value(key, value)
        except ConfigError as err:
            raise ConfigError(f"{path}:{n}: {err}") from None
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """File values, then non-None ``overrides``; the result is validated."""
    values = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = value
    return dataclasses.replace(RunConfig(), **values).validate()


def format_config(config: RunConfig) -> str:
    out = []
    for name in _FIELDS:
        value = getattr(config, name)
        if name == "char_stages":
            value = ",".join(":".join(str(v) for v in s) for s in value)
        elif isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = "none"
        out.append(f"{name} = {value}")
    return "\n".join(out) + "\n"
