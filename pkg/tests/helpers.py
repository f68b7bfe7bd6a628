"""Shared builders for the test suite."""
from __future__ import annotations

from twostep.corpus import (ABUSE, ABUSE_TYPE, ABUSIVE, CORPUS_COUNTS, NONE, THREE_CLASS, Example, LabeledCorpus,
                            SynthSpec, synth_corpus, corpus_share_sizes)
from twostep.systems import FixedSystem, make_system


def make_corpus(rows, schema=THREE_CLASS) -> LabeledCorpus:
    """``rows`` of (label, text); ids are assigned in order."""
    return LabeledCorpus(tuple(Example(f"e{i}", lab, text) for i, (lab, text) in enumerate(rows)), schema)


def counts_corpus(counts: dict[str, int]) -> LabeledCorpus:
    rows = [(lab, f"{lab} {i}") for lab, n in counts.items() for i in range(n)]
    return make_corpus(rows)


def full_counts_corpus() -> LabeledCorpus:
    return counts_corpus(CORPUS_COUNTS)


def synth(n: int, seed: int = 0) -> LabeledCorpus:
    return synth_corpus(SynthSpec(sizes=corpus_share_sizes(n)), seed=seed)


def gold_factory(corpus: LabeledCorpus, step2_constant: str | None = None):
    """System factory whose systems answer every example with its gold label.

    With ``step2_constant`` the racism/sexism step always answers that label.
    """
    gold = {e.id: e.label for e in corpus}

    def make(kind, schema, settings):
        if schema == ABUSE:
            return FixedSystem(schema, {i: (NONE if lab == NONE else ABUSIVE) for i, lab in gold.items()})
        if schema == ABUSE_TYPE and step2_constant is not None:
            return FixedSystem(schema, constant=step2_constant)
        return FixedSystem(schema, gold)
    return make


def constant_factory(label: str):
    return lambda kind, schema, settings: FixedSystem(schema, constant=label)


def prepare_only(kind, schema, settings):
    """A real system whose ``fit`` only fits the text artifacts and builds an untrained model."""
    system = make_system(kind, schema, settings)

    def fit(corpus):
        system._check_schema(corpus)
        system.prepare(corpus)
        return None
    system.fit = fit
    return system


def mutate_texts(corpus: LabeledCorpus, indices) -> LabeledCorpus:
    """Copy of ``corpus`` with the texts at ``indices`` rewritten into unseen words and hashtags."""
    chosen = set(indices)
    rows = []
    for i, e in enumerate(corpus):
        text = f"{e.text} qqleak{i} #neverseen{i}tag zz{i}" if i in chosen else e.text
        rows.append(Example(e.id, e.label, text))
    return LabeledCorpus(tuple(rows), corpus.schema)
