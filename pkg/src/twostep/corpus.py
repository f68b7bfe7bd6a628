"""Labeled tweet corpora, the three dataset segmentations, folds and batches."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DataError

NONE, RACISM, SEXISM, ABUSIVE = "none", "racism", "sexism", "abusive"
LABELS = (NONE, RACISM, SEXISM, ABUSIVE)


@dataclass(frozen=True)
class Schema:
    name: str
    labels: tuple[str, ...]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __len__(self):
        return len(self.labels)


# class order doubles as the tie-break order for stratified remainders
THREE_CLASS = Schema("three_class", (NONE, RACISM, SEXISM))
ABUSE = Schema("abuse", (NONE, ABUSIVE))
ABUSE_TYPE = Schema("abuse_type", (RACISM, SEXISM))
SCHEMAS = {s.name: s for s in (THREE_CLASS, ABUSE, ABUSE_TYPE)}


def get_schema(schema: Schema | str) -> Schema:
    if isinstance(schema, Schema):
        return schema
    try:
        return SCHEMAS[schema]
    except KeyError:
        raise ValueError(f"unknown schema {schema!r}; expected one of {sorted(SCHEMAS)}") from None


class Example(NamedTuple):
    id: str
    label: str
    text: str


@dataclass(frozen=True)
class LabeledCorpus:
    examples: tuple[Example, ...]
    schema: Schema = THREE_CLASS

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(Example(*e) for e in self.examples))
        seen = set()
        for e in self.examples:
            if e.label not in self.schema:
                raise DataError(f"label {e.label!r} not valid under schema {self.schema.name}")
            if e.id in seen:
                raise DataError(f"duplicate example id {e.id!r}")
            seen.add(e.id)

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, i) -> Example:
        return self.examples[i]

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.examples]

    @property
    def texts(self) -> list[str]:
        return [e.text for e in self.examples]

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.examples]

    def label_ids(self) -> np.ndarray:
        lookup = {lab: i for i, lab in enumerate(self.schema.labels)}
        return np.array([lookup[e.label] for e in self.examples], dtype=np.int64)

    def counts(self) -> dict[str, int]:
        out = {lab: 0 for lab in self.schema.labels}
        for e in self.examples:
            out[e.label] += 1
        return out

    def subset(self, indices: Sequence[int]) -> "LabeledCorpus":
        return LabeledCorpus(tuple(self.examples[i] for i in indices), self.schema)

    def relabel(self, mapping: dict[str, str], schema: Schema) -> "LabeledCorpus":
        return LabeledCorpus(
            tuple(Example(e.id, mapping.get(e.label, e.label), e.text) for e in self.examples), schema)

    def with_texts(self, texts: Sequence[str]) -> "LabeledCorpus":
        return LabeledCorpus(
            tuple(Example(e.id, e.label, t) for e, t in zip(self.examples, texts, strict=True)),
            self.schema)

    def digest(self) -> str:
        h = hashlib.sha256(self.schema.name.encode())
        for e in self.examples:
            h.update("\x1f".join(e).encode("utf-8") + b"\x1e")
        return h.hexdigest()


def load_dataset(path, schema: Schema | str = THREE_CLASS) -> LabeledCorpus:
    """Read ``id<TAB>label<TAB>text`` rows (UTF-8, no header)."""
    schema = get_schema(schema)
    path = Path(path)
    if not path.exists():
        raise DataError("no such file", path=path)
    examples = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) < 3:
                raise DataError(f"expected 3 tab-separated columns, got {len(parts)}",
                                path=path, line=lineno)
            ex_id, label, text = parts
            label = label.strip()
            if label not in schema:
                raise DataError(f"unknown label {label!r} for schema {schema.name} "
                                f"(allowed: {', '.join(schema.labels)})", path=path, line=lineno)
            if ex_id in seen:
                raise DataError(f"duplicate id {ex_id!r} (first seen on line {seen[ex_id]})",
                                path=path, line=lineno)
            seen[ex_id] = lineno
            examples.append(Example(ex_id, label, text))
    return LabeledCorpus(tuple(examples), schema)


def _clean_field(text: str) -> str:
    return text.replace("\t", " ").replace("\r", " ").replace("\n", " ")


def write_dataset(corpus: LabeledCorpus, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in corpus:
            fh.write(f"{e.id}\t{e.label}\t{_clean_field(e.text)}\n")


def segment_datasets(corpus: LabeledCorpus) -> tuple[LabeledCorpus, LabeledCorpus, LabeledCorpus]:
    """Split a 3-class corpus into the one-step, two-step-1 and two-step-2 views.

    Two-step-1 merges racism and sexism into ``abusive``; two-step-2 keeps only
    the abusive examples with their specific labels.
    """
    if corpus.schema != THREE_CLASS:
        raise ValueError(f"segment_datasets needs a three-class corpus, got {corpus.schema.name}")
    step1 = corpus.relabel({RACISM: ABUSIVE, SEXISM: ABUSIVE}, ABUSE)
    abusive = [i for i, e in enumerate(corpus) if e.label != NONE]
    step2 = LabeledCorpus(tuple(corpus[i] for i in abusive), ABUSE_TYPE)
    return corpus, step1, step2


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]
    seed: int

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f != fold]

    def fold_sizes(self) -> list[int]:
        return np.bincount(np.asarray(self.assignments, dtype=np.int64), minlength=self.k).tolist()


def stratified_folds(corpus: LabeledCorpus, k: int = 10, seed: int = 0) -> FoldPlan:
    """Assign every example to one of ``k`` folds, stratified by label.

    Within each class the examples are shuffled and dealt round-robin. The
    dealing position carries over from one class to the next (in schema
    order), so the remainders of successive classes land on different folds
    and overall fold sizes differ by at most one.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    counts = corpus.counts()
    for label in corpus.schema.labels:
        if 0 < counts[label] < k:
            raise DataError(f"class {label!r} has {counts[label]} examples, fewer than k={k}")
    rng = np.random.default_rng(seed)
    labels = corpus.label_ids()
    assign = np.full(len(corpus), -1, dtype=np.int64)
    offset = 0
    for c in range(len(corpus.schema)):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        assign[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return FoldPlan(k, tuple(int(a) for a in assign), seed)


def stratified_split(labels: np.ndarray, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Hold out ``fraction`` of each class; returns (kept, held_out) index arrays.

    Classes with at least two members always keep one and hold out one.
    """
    rng = np.random.default_rng(seed)
    kept, held = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        n_out = int(round(fraction * members.size))
        if members.size >= 2:
            n_out = min(max(n_out, 1), members.size - 1)
        else:
            n_out = 0
        held.append(members[:n_out])
        kept.append(members[n_out:])
    return np.sort(np.concatenate(kept)), np.sort(np.concatenate(held))


@dataclass(frozen=True)
class Batch:
    indices: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.indices)


def balanced_batches(corpus: LabeledCorpus, batch_size: int = 32, seed: int = 0,
                     plan: FoldPlan | None = None, excluded_fold: int | None = None) -> Iterator[Batch]:
    """Infinite stream of label-balanced batches of corpus indices.

    Each class is walked as a cyclic shuffle, reshuffled on every pass, so
    small classes are revisited (sampled with replacement across passes).
    Per batch every class gets ``batch_size // K`` slots and a random subset
    of classes one extra slot, so class counts differ by at most one.
    """
    labels = corpus.label_ids()
    allowed = np.arange(len(corpus))
    if excluded_fold is not None:
        if plan is None:
            raise ValueError("excluded_fold needs a FoldPlan")
        allowed = np.asarray(plan.train_indices(excluded_fold), dtype=np.int64)
    n_classes = len(corpus.schema)
    if batch_size < n_classes:
        raise ValueError(f"batch_size {batch_size} smaller than number of classes {n_classes}")
    pools = [allowed[labels[allowed] == c] for c in range(n_classes)]
    for c, pool in enumerate(pools):
        if pool.size == 0:
            raise DataError(f"class {corpus.schema.labels[c]!r} has no examples to sample from")
    return _batch_stream(pools, batch_size, np.random.default_rng(seed))


def balanced_index_batches(labels: np.ndarray, n_classes: int, batch_size: int = 32,
                           seed: int = 0) -> Iterator[Batch]:
    """Same stream as :func:`balanced_batches` over an integer label array."""
    labels = np.asarray(labels, dtype=np.int64)
    if batch_size < n_classes:
        raise ValueError(f"batch_size {batch_size} smaller than number of classes {n_classes}")
    pools = [np.flatnonzero(labels == c) for c in range(n_classes)]
    for c, pool in enumerate(pools):
        if pool.size == 0:
            raise DataError(f"class index {c} has no examples to sample from")
    return _batch_stream(pools, batch_size, np.random.default_rng(seed))


def _batch_stream(pools, batch_size, rng) -> Iterator[Batch]:
    n_classes = len(pools)
    base, extra = divmod(batch_size, n_classes)
    orders = [pool[rng.permutation(pool.size)] for pool in pools]
    cursors = [0] * n_classes
    while True:
        quota = np.full(n_classes, base)
        quota[rng.permutation(n_classes)[:extra]] += 1
        picked = []
        for c in range(n_classes):
            for _ in range(quota[c]):
                if cursors[c] == orders[c].size:
                    orders[c] = pools[c][rng.permutation(pools[c].size)]
                    cursors[c] = 0
                picked.append(int(orders[c][cursors[c]]))
                cursors[c] += 1
        picked = [picked[i] for i in rng.permutation(len(picked))]
        yield Batch(tuple(picked))


# ---------------------------------------------------------------- synthetic corpora

DEFAULT_LEXICONS = {
    NONE: ["weather", "coffee", "football", "music", "garden", "holiday", "movie", "recipe",
           "traffic", "concert", "puppy", "sunset"],
    RACISM: ["islamists", "jihadi", "sharia", "caliphate", "mohammed", "quran", "terrorists",
             "isis", "muslims", "hamas"],
    SEXISM: ["feminazi", "womenagainstfeminism", "notsexist", "kitchen", "feminists", "girls",
             "blondes", "mkr", "sandwich", "femininity"],
}
DEFAULT_FILLER = ["the", "a", "is", "so", "this", "just", "and", "you", "i", "today", "really",
                  "they", "what", "lol", "rt", "all", "about", "some", "people", "think"]

# class shares of the published corpus: 12,427 none / 2,059 racism / 3,864 sexism
CORPUS_COUNTS = {NONE: 12427, RACISM: 2059, SEXISM: 3864}


@dataclass
class SynthSpec:
    sizes: dict[str, int]
    lexicons: dict[str, list[str]] = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_LEXICONS.items()})
    filler: list[str] = field(default_factory=lambda: list(DEFAULT_FILLER))
    signal_rate: float = 0.3
    min_tokens: int = 5
    max_tokens: int = 14
    hashtag_rate: float = 0.2
    schema: Schema = THREE_CLASS


def corpus_share_sizes(total: int) -> dict[str, int]:
    """Class sizes summing to ``total`` with the published corpus proportions."""
    grand = sum(CORPUS_COUNTS.values())
    raw = {k: total * v / grand for k, v in CORPUS_COUNTS.items()}
    sizes = {k: int(math.floor(v)) for k, v in raw.items()}
    short = total - sum(sizes.values())
    for k in sorted(raw, key=lambda k: raw[k] - sizes[k], reverse=True)[:short]:
        sizes[k] += 1
    return sizes


def synth_corpus(spec: SynthSpec, seed: int = 0) -> LabeledCorpus:
    """Generate a labeled corpus whose texts carry class signal words.

    Every text holds at least one signal word of its class; each further
    token is a signal word with probability ``signal_rate`` and a shared
    filler word otherwise. Some signal words are emitted as hashtags, either
    alone or glued to a second signal word.
    """
    for label in spec.sizes:
        if label not in spec.schema:
            raise ValueError(f"label {label!r} not in schema {spec.schema.name}")
        if not spec.lexicons.get(label):
            raise ValueError(f"empty lexicon for class {label!r}")
    if spec.signal_rate < 1.0 and not spec.filler:
        raise ValueError("empty filler lexicon")
    rng = np.random.default_rng(seed)
    examples = []
    n = 0
    for label in spec.schema.labels:
        lex = spec.lexicons.get(label, [])
        for _ in range(spec.sizes.get(label, 0)):
            length = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
            is_signal = rng.random(length) < spec.signal_rate
            is_signal[rng.integers(length)] = True
            words = []
            for sig in is_signal:
                if sig:
                    w = lex[rng.integers(len(lex))]
                    if rng.random() < spec.hashtag_rate:
                        if rng.random() < 0.5:
                            w = w + lex[rng.integers(len(lex))]
                        w = "#" + w
                    words.append(w)
                else:
                    words.append(spec.filler[rng.integers(len(spec.filler))])
            examples.append(Example(f"s{n:06d}", label, " ".join(words)))
            n += 1
    order = rng.permutation(len(examples))
    return LabeledCorpus(tuple(examples[i] for i in order), spec.schema)
