"""Acceptance suite: one recorded status line per criterion at the pinned tolerances."""
import os
import random
import time

import numpy as np
import pytest

from twostep import cli
from twostep.corpus import (ABUSIVE, CORPUS_COUNTS, NONE, RACISM, SEXISM, SynthSpec, load_dataset,
                            segment_datasets, stratified_folds, synth_corpus, write_dataset)
from twostep.diagnostics import (GRADCHECK_KINDS, TOLERANCE, desk_experiment, gradcheck_kind, overfit,
                                 overfit_corpus)
from twostep.metrics import confusion, prf
from twostep.pipeline import PipelineSpec, run, run_one_step
from twostep.systems import SYSTEM_KINDS, SystemSettings, make_system
from twostep.textprep import UnigramModel, segment_hashtag
from twostep.train import train

from acceptance_log import record
from helpers import mutate_texts, prepare_only, synth
from oracles import brute_force_prf, brute_force_segment

REAL_CORPUS = os.environ.get("TWOSTEP_CORPUS")
REAL_EMBEDDINGS = os.environ.get("TWOSTEP_EMBEDDINGS")
TINY_COUNTS = {"a": 5, "ab": 3, "abc": 2, "b": 4, "ba": 1, "cab": 2, "c": 1, "bc": 2}


def test_01_gradient_fidelity():
    start = time.perf_counter()
    worst = {}
    for kind in GRADCHECK_KINDS:
        errs = gradcheck_kind(kind, n_coords=20)
        worst[kind] = max(errs.values())
    elapsed = time.perf_counter() - start
    passed = max(worst.values()) < TOLERANCE and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s (< 60s)"
    record(1, "gradient fidelity (max rel err < 1e-4)", passed, detail)
    assert passed


def test_02_segmentation_counts():
    rng = np.random.default_rng(0)
    checked = 0
    ok = True
    for trial in range(50):
        sizes = {lab: int(n) for lab, n in zip((NONE, RACISM, SEXISM), rng.integers(0, 60, size=3))}
        corpus = synth_corpus(SynthSpec(sizes=sizes), seed=trial)
        one, s1, s2 = segment_datasets(corpus)
        c = corpus.counts()
        ok &= s1.counts().get(ABUSIVE, 0) == c[RACISM] + c[SEXISM] == len(s2)
        ok &= len(one) == len(s1) == len(corpus)
        checked += 1
    counts = cli.counts_summary(synth_corpus(SynthSpec(sizes=dict(CORPUS_COUNTS)), seed=0))
    full = counts["two_step_1"] == {NONE: 12427, ABUSIVE: 5923} and \
        counts["two_step_2"] == {RACISM: 2059, SEXISM: 3864}
    passed = bool(ok and full)
    record(2, "segmentation oracle", passed,
           f"{checked} synthetic corpora |abusive| = |racism| + |sexism|; full-size count corpus "
           f"12427/2059/3864/5923 {'matches' if full else 'differs'}")
    assert passed


@pytest.mark.skipif(not REAL_CORPUS, reason="set TWOSTEP_CORPUS to a hydrated corpus TSV")
def test_02b_real_corpus_counts():
    counts = cli.counts_summary(load_dataset(REAL_CORPUS))
    got = (counts["one_step"][NONE], counts["one_step"][RACISM], counts["one_step"][SEXISM],
           counts["two_step_1"][ABUSIVE])
    passed = got == (12427, 2059, 3864, 5923)
    record(2, "segmentation oracle on the supplied corpus", passed, f"counts {got}")
    assert passed


def test_03_hashtag_dp_equivalence():
    model = UnigramModel(TINY_COUNTS)
    rng = random.Random(0)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        tag = "".join(rng.choice("abcx") for _ in range(rng.randint(1, 12)))
        mismatches += segment_hashtag(tag, model) != brute_force_segment(tag, TINY_COUNTS)
    elapsed = time.perf_counter() - start
    passed = mismatches == 0 and elapsed < 30
    record(3, "hashtag DP equals exhaustive search", passed,
           f"500 strings, {mismatches} mismatches, {elapsed:.1f}s (< 30s)")
    assert passed


def test_04_metric_oracle():
    rng = np.random.default_rng(0)
    mismatches = 0
    for i in range(1000):
        k = 2 + i % 2
        n = int(rng.integers(0, 40))
        golds, preds = rng.integers(0, k, size=n), rng.integers(0, k, size=n)
        r = prf(confusion(golds, preds, k))
        p, rc, f, weighted = brute_force_prf(golds.tolist(), preds.tolist(), k)
        same = (np.array_equal(r.precision, p) and np.array_equal(r.recall, rc) and np.array_equal(r.f1, f)
                and r.total == weighted)
        mismatches += not same
    worked = prf(confusion([0, 0, 1, 2], [0, 1, 1, 1], 3)).weighted_f1
    err = abs(worked - (2 * (2 / 3) + 0.5) / 4)
    passed = mismatches == 0 and err <= 1e-12
    record(4, "metric oracle", passed,
           f"1000 random pairs (K=2,3), {mismatches} mismatches; worked example weighted F1 "
           f"{worked:.4f} (err {err:.1e})")
    assert passed


def test_05_overfit():
    corpus = overfit_corpus(32)
    parts, passed = [], True
    for kind in SYSTEM_KINDS:
        start = time.perf_counter()
        steps, acc, _ = overfit(kind, corpus, max_batches=500)
        elapsed = time.perf_counter() - start
        ok = acc == 1.0 and steps <= 500 and (kind not in ("charcnn", "wordcnn", "hybridcnn") or elapsed < 120)
        passed &= ok
        parts.append(f"{kind} {steps} batches {elapsed:.1f}s")
    record(5, "overfit 32 separable examples within 500 batches", passed, "; ".join(parts))
    assert passed


def test_06_desk_experiment():
    start = time.perf_counter()
    one, two = desk_experiment(n=2000, k=5, seed=0)
    elapsed = time.perf_counter() - start
    f_one, f_two = one.total.weighted_f1, two.total.weighted_f1
    passed = f_one > 0.90 and f_two > 0.90 and abs(f_one - f_two) < 0.05 and elapsed < 15 * 60
    record(6, "desk-scale 5-fold CV", passed,
           f"one-step HybridCNN F1 {f_one:.3f}, two-step LR+LR F1 {f_two:.3f}, "
           f"|diff| {abs(f_one - f_two):.3f}, {elapsed / 60:.1f} min (< 15 min)")
    assert passed


def test_07_static_embeddings():
    corpus = synth(200, seed=3)
    parts, passed = [], True
    for kind in ("wordcnn", "hybridcnn"):
        system = make_system(kind, corpus.schema)
        system.prepare(corpus)
        before = system.model.params.digest("embedding.table")
        train(system.model, system.encode(corpus), corpus.label_ids(), system.settings.train)
        after = system.model.params.digest("embedding.table")
        passed &= before == after
        parts.append(f"{kind} {'unchanged' if before == after else 'CHANGED'} ({before[:12]})")
    record(7, "static embedding table", passed, "; ".join(parts))
    assert passed


def test_08_cv_determinism(tmp_path):
    data = tmp_path / "d.tsv"
    write_dataset(synth(150, seed=2), data)
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        for mode, extra in (("one_step", ["--model", "hybridcnn"]), ("two_step", ["--step1", "fasttext",
                                                                                  "--step2", "svm"])):
            args = ["cv", "--dataset", str(data), "--mode", mode, *extra, "--folds", "3", "--seed", "5",
                    "--set", "max_epochs=3", "--out", str(out / mode)]
            assert cli.main(args) == 0
        runs.append({str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    passed = runs[0] == runs[1] and len(runs[0]) == 6
    record(8, "cv determinism", passed, f"{len(runs[0])} report files byte-identical across two runs")
    assert passed


def test_09_leakage_audit():
    corpus = synth(160, seed=6)
    plan = stratified_folds(corpus, 4, 0)
    parts, passed = [], True
    for kind in SYSTEM_KINDS:
        spec = PipelineSpec(step1=kind, k=4)
        for fold in range(plan.k):
            mutated = mutate_texts(corpus, plan.test_indices(fold))
            a = run_one_step(spec, corpus, factory=prepare_only, plan=plan, only_folds=[fold])
            b = run_one_step(spec, mutated, factory=prepare_only, plan=plan, only_folds=[fold])
            passed &= a.digests == b.digests
        parts.append(f"{kind}: {'/'.join(sorted(k for k in a.digests[0] if k != 'alphabet'))}")
    # a trained system too, so nothing fitted during training reads test texts
    settings = SystemSettings()
    a = run_one_step(PipelineSpec(step1="lr", k=4), corpus, settings, plan=plan, only_folds=[0])
    b = run_one_step(PipelineSpec(step1="lr", k=4), mutate_texts(corpus, plan.test_indices(0)), settings,
                     plan=plan, only_folds=[0])
    passed &= a.digests == b.digests and a.train_reports == b.train_reports
    record(9, "leakage audit", passed, "artifact hashes invariant to test-fold mutation; " + "; ".join(parts))
    assert passed


@pytest.mark.skipif(not (REAL_CORPUS and REAL_EMBEDDINGS),
                    reason="stretch goal: set TWOSTEP_CORPUS and TWOSTEP_EMBEDDINGS")
def test_10_real_corpus_stretch():
    corpus = load_dataset(REAL_CORPUS)
    settings = SystemSettings(embeddings=REAL_EMBEDDINGS)
    one = run(PipelineSpec("one_step", "hybridcnn", k=10), corpus, settings)
    two = run(PipelineSpec("two_step", "lr", "lr", k=10), corpus, settings)
    f_one, f_two = one.total.weighted_f1, two.total.weighted_f1
    passed = abs(f_one - 0.827) <= 0.05 and abs(f_two - 0.824) <= 0.05
    record(10, "published-scale stretch", passed, f"HybridCNN F1 {f_one:.3f} (0.827), LR two-step {f_two:.3f} (0.824)")
    assert passed


def test_10_stretch_status():
    if REAL_CORPUS and REAL_EMBEDDINGS:
        pytest.skip("the real-corpus run reports criterion 10 itself")
    record(10, "published-scale stretch", None,
           "not blocking; needs the hydrated corpus and a 300-d embedding file "
           "(set TWOSTEP_CORPUS and TWOSTEP_EMBEDDINGS)")
