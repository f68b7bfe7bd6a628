"""Tweet text to model inputs: tokens, character grids, word ids, embeddings."""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

LETTERS = "abcdefghijklmnopqrstuvwxyz"
DIGITS = "0123456789"
MARKS = "-,;.!?:'\"/\\|_@#$%^&*~`+=<>()[]{}"
ALPHABET_SYMBOLS = LETTERS + DIGITS + MARKS + " " + "\n"

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
URL_TOKEN, USER_TOKEN = "<url>", "<user>"


class CharAlphabet:
    """Ordered symbol set for character quantization; index ``len(self)`` is PAD."""

    def __init__(self, symbols: str = ALPHABET_SYMBOLS):
        if len(set(symbols)) != len(symbols):
            raise ValueError("alphabet symbols must be distinct")
        self.symbols = symbols
        self.index = {ch: i for i, ch in enumerate(symbols)}

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, ch):
        return ch in self.index

    @property
    def pad(self) -> int:
        return len(self.symbols)

    def digest(self) -> str:
        return hashlib.sha256(self.symbols.encode("utf-8")).hexdigest()


ALPHABET = CharAlphabet()
assert len(ALPHABET) == 70


def quantize_chars(text: str, alphabet: CharAlphabet = ALPHABET, length: int = 140) -> np.ndarray:
    """Lowercase, drop symbols outside the alphabet, then truncate or PAD to ``length``."""
    if length < 1:
        raise ValueError("character length must be >= 1")
    idx = [alphabet.index[ch] for ch in text.lower() if ch in alphabet.index][:length]
    out = np.full(length, alphabet.pad, dtype=np.int64)
    out[:len(idx)] = idx
    return out


def decode_chars(grid: np.ndarray, alphabet: CharAlphabet = ALPHABET) -> str:
    return "".join(alphabet.symbols[i] for i in grid if i != alphabet.pad)


# ---------------------------------------------------------------- tokenization

def _is_punct(ch: str) -> bool:
    return not (ch.isalnum() or ch == "_")


def _keep_punct(ch: str) -> bool:
    # emoji and other non-ASCII symbols are dropped rather than tokenized
    return ch.isascii() and ch.isprintable()


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with edge punctuation split off.

    ``#`` and ``@`` stay attached when they start a word. URLs become
    ``<url>`` and @-mentions ``<user>``.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        i, n = 0, len(chunk)
        lead = []
        while i < n and _is_punct(chunk[i]):
            if chunk[i] in "#@" and i + 1 < n and not _is_punct(chunk[i + 1]):
                break
            lead.append(chunk[i])
            i += 1
        tokens.extend(c for c in lead if _keep_punct(c))
        core = chunk[i:]
        if core.startswith(("http://", "https://", "www.")):
            tokens.append(URL_TOKEN)
            continue
        j = len(core)
        while j > 0 and _is_punct(core[j - 1]):
            j -= 1
        word, trail = core[:j], core[j:]
        if word:
            tokens.append(USER_TOKEN if word.startswith("@") and len(word) > 1 else word)
        tokens.extend(c for c in trail if _keep_punct(c))
    return tokens


# ---------------------------------------------------------------- hashtag segmentation

@dataclass
class UnigramModel:
    """Word counts for segmentation. Unknown words get ``10 / (total * 10**len)``."""

    counts: dict[str, int]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for w, c in self.counts.items():
            if c < 1:
                raise ValueError(f"count for {w!r} must be >= 1, got {c}")
        self.total = sum(self.counts.values())

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], extra: dict[str, int] | None = None):
        counts = Counter(t for t in tokens if t.isalnum())
        for w, c in (extra or {}).items():
            counts[w] += c
        return cls(dict(counts))

    def score(self, word: str) -> tuple[int, int]:
        """Exact probability of ``word`` as a (numerator, denominator) pair."""
        total = max(self.total, 1)
        c = self.counts.get(word)
        if c is not None:
            return c, total
        return 10, total * 10 ** len(word)

    def probability(self, word: str) -> float:
        num, den = self.score(word)
        return num / den

    def digest(self) -> str:
        h = hashlib.sha256()
        for w in sorted(self.counts):
            h.update(f"{w}\t{self.counts[w]}\n".encode("utf-8"))
        return h.hexdigest()


def load_unigram_counts(path) -> dict[str, int]:
    """Read an optional ``token<TAB>count`` frequency file."""
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError("expected token<TAB>count", path=path, line=lineno)
            try:
                c = int(parts[1])
            except ValueError:
                raise DataError(f"count {parts[1]!r} is not an integer", path=path, line=lineno) from None
            if c < 1:
                raise DataError("counts must be >= 1", path=path, line=lineno)
            counts[parts[0]] = counts.get(parts[0], 0) + c
    return counts


def segment_hashtag(tag: str, model: UnigramModel, max_word_len: int = 24) -> list[str]:
    """Most probable split of ``tag`` into words under a unigram model.

    Dynamic programming over prefixes with exact rational scores. Among equal
    scores fewer words win; remaining ties prefer the longer final word.
    """
    if not tag:
        return []
    key = (tag, max_word_len)
    hit = model._cache.get(key)
    if hit is not None:
        return list(hit)
    n = len(tag)
    # best[i] = (num, den, n_words, start of last word) for prefix tag[:i]
    best: list[tuple[int, int, int, int] | None] = [None] * (n + 1)
    best[0] = (1, 1, 0, 0)
    for i in range(1, n + 1):
        cand = None
        for j in range(max(0, i - max_word_len), i):
            prev = best[j]
            if prev is None:
                continue
            wn, wd = model.score(tag[j:i])
            num, den, words = prev[0] * wn, prev[1] * wd, prev[2] + 1
            if cand is None:
                cand = (num, den, words, j)
                continue
            lhs, rhs = num * cand[1], cand[0] * den
            if lhs > rhs or (lhs == rhs and words < cand[2]):
                cand = (num, den, words, j)
        best[i] = cand
    if best[n] is None:
        return [tag]
    words = []
    i = n
    while i > 0:
        j = best[i][3]
        words.append(tag[j:i])
        i = j
    words.reverse()
    model._cache[key] = tuple(words)
    return words


def expand_tokens(tokens: Sequence[str], model: UnigramModel | None, segment_hashtags: bool = True) -> list[str]:
    """Replace each ``#tag`` by its segmentation (the ``#`` itself is dropped)."""
    if not segment_hashtags or model is None:
        return list(tokens)
    out = []
    for tok in tokens:
        if tok.startswith("#") and len(tok) > 1:
            out.extend(segment_hashtag(tok[1:], model))
        else:
            out.append(tok)
    return out


# ---------------------------------------------------------------- vocabulary and embeddings

class Vocab:
    def __init__(self, tokens: Sequence[str]):
        self.tokens = [PAD_TOKEN, UNK_TOKEN] + [t for t in tokens if t not in (PAD_TOKEN, UNK_TOKEN)]
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok):
        return tok in self.index

    def lookup(self, tok: str) -> int:
        return self.index.get(tok, UNK)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()


def build_vocab(texts: Iterable[str], min_freq: int = 1, model: UnigramModel | None = None,
                segment_hashtags: bool = True) -> Vocab:
    """Vocabulary of tokens seen at least ``min_freq`` times, ordered by (-freq, token)."""
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    freq = Counter()
    for text in texts:
        freq.update(expand_tokens(tokenize(text), model, segment_hashtags))
    kept = sorted((t for t, c in freq.items() if c >= min_freq), key=lambda t: (-freq[t], t))
    return Vocab(kept)


@dataclass
class EmbeddingTable:
    vectors: np.ndarray
    trainable: bool = False

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.vectors).tobytes()).hexdigest()


def load_embeddings(path, vocab: Vocab, dim: int = 300) -> EmbeddingTable:
    """Read word2vec text format (``<n> <d>`` header, then ``word v1 .. vd``).

    Vocabulary words missing from the file keep an all-zero row, as does PAD.
    """
    path = Path(path)
    vectors = np.zeros((len(vocab), dim))
    with open(path, encoding="utf-8", errors="strict") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise DataError("expected header '<count> <dim>'", path=path, line=1)
        file_dim = int(header[1])
        if file_dim != dim:
            raise DataError(f"embedding dimension mismatch: file has {file_dim}, configured {dim}",
                            path=path, line=1)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise DataError(f"expected word and {dim} values, got {len(parts) - 1} values",
                                path=path, line=lineno)
            idx = vocab.index.get(parts[0])
            if idx is None or idx == PAD:
                continue
            try:
                vectors[idx] = [float(v) for v in parts[1:]]
            except ValueError:
                raise DataError("non-numeric vector component", path=path, line=lineno) from None
    return EmbeddingTable(vectors, trainable=False)


def word_vector(word: str, dim: int, seed: int = 0, scale: float = 0.25) -> np.ndarray:
    """Deterministic pseudo-random vector for ``word``, uniform in [-scale, scale]."""
    digest = hashlib.sha256(f"{seed}\x00{word}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.uniform(-scale, scale, size=dim)


def random_embeddings(vocab: Vocab, dim: int = 300, seed: int = 0) -> EmbeddingTable:
    """Stand-in table when no pretrained file is given: each word hashes to a fixed vector."""
    vectors = np.zeros((len(vocab), dim))
    for i, tok in enumerate(vocab.tokens):
        if i != PAD:
            vectors[i] = word_vector(tok, dim, seed)
    return EmbeddingTable(vectors, trainable=False)


def write_embeddings(path, words: Sequence[str], vectors: np.ndarray):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {vectors.shape[1]}\n")
        for w, v in zip(words, vectors):
            fh.write(w + " " + " ".join(repr(float(x)) for x in v) + "\n")


def encode_words(tokens: Sequence[str], vocab: Vocab, length: int = 35, segment_hashtags: bool = True,
                 model: UnigramModel | None = None) -> np.ndarray:
    """Vocabulary ids for ``tokens``, truncated or PAD-extended to ``length``."""
    if length < 1:
        raise ValueError("word length must be >= 1")
    ids = [vocab.lookup(t) for t in expand_tokens(tokens, model, segment_hashtags)][:length]
    out = np.full(length, PAD, dtype=np.int64)
    out[:len(ids)] = ids
    return out


# ---------------------------------------------------------------- fitted encoder

@dataclass
class TextConfig:
    char_length: int = 140
    word_length: int = 35
    min_freq: int = 1
    segment_hashtags: bool = True


class TextEncoder:
    """Holds the training-split artifacts (unigram model, vocabulary) for one run."""

    def __init__(self, config: TextConfig | None = None, alphabet: CharAlphabet = ALPHABET):
        self.config = config or TextConfig()
        self.alphabet = alphabet
        self.unigram: UnigramModel | None = None
        self.vocab: Vocab | None = None

    def fit(self, texts: Sequence[str], extra_counts: dict[str, int] | None = None) -> "TextEncoder":
        toks = [t for text in texts for t in tokenize(text)]
        self.unigram = UnigramModel.from_tokens(toks, extra_counts)
        self.vocab = build_vocab(texts, self.config.min_freq, self.unigram, self.config.segment_hashtags)
        return self

    def words(self, text: str) -> list[str]:
        return expand_tokens(tokenize(text), self.unigram, self.config.segment_hashtags)

    def encode_chars(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([quantize_chars(t, self.alphabet, self.config.char_length) for t in texts]) \
            if texts else np.zeros((0, self.config.char_length), dtype=np.int64)

    def encode_words(self, texts: Sequence[str]) -> np.ndarray:
        if self.vocab is None:
            raise RuntimeError("TextEncoder.fit must run before encoding words")
        rows = [encode_words(tokenize(t), self.vocab, self.config.word_length,
                             self.config.segment_hashtags, self.unigram) for t in texts]
        return np.stack(rows) if rows else np.zeros((0, self.config.word_length), dtype=np.int64)

    def digests(self) -> dict[str, str]:
        return {
            "alphabet": self.alphabet.digest(),
            "vocab": self.vocab.digest() if self.vocab else "",
            "unigram": self.unigram.digest() if self.unigram else "",
        }

    def state(self) -> dict:
        return {
            "config": vars(self.config).copy(),
            "alphabet": self.alphabet.symbols,
            "vocab": self.vocab.tokens[2:] if self.vocab else None,
            "unigram": dict(self.unigram.counts) if self.unigram else None,
        }

    @classmethod
    def from_state(cls, state: dict) -> "TextEncoder":
        enc = cls(TextConfig(**state["config"]), CharAlphabet(state["alphabet"]))
        if state.get("unigram") is not None:
            enc.unigram = UnigramModel(dict(state["unigram"]))
        if state.get("vocab") is not None:
            enc.vocab = Vocab(state["vocab"])
        return enc
