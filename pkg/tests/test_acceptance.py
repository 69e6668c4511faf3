"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

import time

import numpy as np
import pytest

from oodkit import baselines, detector, embednet, mathcore, persist, pipeline
from oodkit.cli import main as cli_main
from oodkit.corpus import Vocabulary, build_vocab
from oodkit.detector import Autoencoder, find_eer
from oodkit.embednet import (
    DomainClassifier,
    LstmParams,
    RnnParams,
    TwoChannelEmbedding,
    lstm_backward,
    lstm_forward,
    rnn_backward,
    rnn_forward,
)
from oodkit.mathcore import grad_check, make_rng
from oracles import brute_force_eer, nn_d_oracle


def report(num, name, ok, detail=""):
    line = f"[acceptance {num}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    assert ok, line


# -- criterion 1: gradient correctness --------------------------------------

def _toy_classifier(cell, seed=7):
    rng = make_rng(seed)
    k, v = 9, 4
    vocab = Vocabulary([f"w{i}" for i in range(k - 1)])
    E = rng.uniform(-0.5, 0.5, size=(k, v))
    emb = TwoChannelEmbedding("two-channel", static=E.copy(), dynamic=E.copy())
    model = DomainClassifier(vocab, ["d0", "d1", "d2"], emb, hidden=5,
                             cell_kind=cell, seed=seed + 1, dtype=np.float64)
    return model


def _check_full_bptt(cell):
    model = _toy_classifier(cell)
    tokens = ["w0", "w3", "w1", "w0", "w5"]
    _, grads, emb_grads = model.sentence_gradients(tokens, "d1")
    params = dict(model.params())
    dense = np.zeros_like(model.embedding.dynamic)
    for w, g in emb_grads.items():
        dense[w] = g
    params["emb.dynamic"] = model.embedding.dynamic
    grads = dict(grads, **{"emb.dynamic": dense})
    coords = sum(p.size for p in params.values())
    err = grad_check(lambda: model.loss(tokens, "d1"), params, grads,
                     epsilon=1e-5)
    return err, coords


def _check_cell(cell):
    rng = make_rng(3)
    h_dim, e, T = 5, 4, 1
    inputs = [rng.uniform(-0.8, 0.8, size=e) for _ in range(T)]
    if cell == "lstm":
        params = LstmParams(h_dim, e, make_rng(4), dtype=np.float64)
        fwd, bwd = lstm_forward, lstm_backward
    else:
        params = RnnParams(h_dim, e, make_rng(4), dtype=np.float64)
        fwd, bwd = rnn_forward, rnn_backward
    h, caches = fwd(params, inputs)
    grads, _ = bwd(params, caches, h.copy())

    def loss():
        hh, _ = fwd(params, inputs)
        return 0.5 * float(np.dot(hh, hh))

    coords = sum(p.size for p in params.params().values())
    return grad_check(loss, params.params(), grads, epsilon=1e-5), coords


def _check_autoencoder():
    ae = Autoencoder(8, seed=5, dtype=np.float64)
    reps = make_rng(6).uniform(-0.8, 0.8, size=(4, 8))
    _, grads = ae.batch_gradients(reps)
    coords = sum(p.size for p in ae.params().values())
    err = grad_check(lambda: ae.batch_gradients(reps)[0], ae.params(), grads,
                     epsilon=1e-5)
    return err, coords


def test_criterion_1_gradient_correctness():
    t0 = time.time()
    checks = {
        "lstm-cell": _check_cell("lstm"),
        "rnn-cell": _check_cell("rnn"),
        "full-bptt-lstm": _check_full_bptt("lstm"),  # covers embedding + output layer
        "full-bptt-rnn": _check_full_bptt("rnn"),
        "autoencoder": _check_autoencoder(),
    }
    elapsed = time.time() - t0
    worst = max(err for err, _ in checks.values())
    total_coords = sum(n for _, n in checks.values())
    ok = worst < 1e-4 and total_coords >= 200 and elapsed < 30.0
    report(1, "gradient correctness", ok,
           f"max rel err {worst:.2e}, {total_coords} coords, {elapsed:.1f}s")


# -- criterion 2: EER oracle equivalence ------------------------------------

def test_criterion_2_eer_oracle_equivalence():
    rng = make_rng(2024)
    mismatches = 0
    for trial in range(100):
        n_id = int(rng.integers(2, 200))
        n_ood = int(rng.integers(2, 200))
        if trial % 4 == 0:
            scores_id = rng.integers(0, 8, size=n_id).astype(float)
            scores_ood = rng.integers(0, 8, size=n_ood).astype(float)
        else:
            scores_id = rng.normal(size=n_id)
            scores_ood = rng.normal(0.3, 1.1, size=n_ood)
        curve = find_eer(scores_id, scores_ood)
        eer, thr = brute_force_eer(scores_id, scores_ood)
        if curve.eer != eer or curve.eer_threshold != thr:
            mismatches += 1
    hand_sep = find_eer([0.1, 0.2], [0.9, 1.0]).eer == 0.0
    hand_half = find_eer([1.0, 2.0], [1.0, 2.0]).eer == 0.5
    ok = mismatches == 0 and hand_sep and hand_half
    report(2, "EER oracle equivalence", ok,
           f"{mismatches} mismatches in 100 instances; hand cases "
           f"sep={hand_sep}, half={hand_half}")


# -- criterion 3: frozen-channel invariant ----------------------------------

def test_criterion_3_frozen_static_channel(bench_runs):
    run = bench_runs[42].result
    static_ok = run.model.embedding.static.tobytes() == run.pretrained.tobytes()
    changed_rows = int(np.count_nonzero(
        np.any(run.model.embedding.dynamic != run.pretrained, axis=1)))
    ok = static_ok and changed_rows >= 1
    report(3, "frozen-channel invariant", ok,
           f"static byte-identical={static_ok}, dynamic rows changed={changed_rows}")


# -- criterion 4: synthetic end-to-end --------------------------------------

def test_criterion_4_synthetic_end_to_end(bench_runs):
    run = bench_runs[42]
    ok = (run.eer_dc_ae <= 0.15 and run.accuracy >= 0.95
          and run.duration < 600.0)
    report(4, "synthetic end-to-end", ok,
           f"eer={run.eer_dc_ae:.4f} (<=0.15), accuracy={run.accuracy:.4f} "
           f"(>=0.95), runtime={run.duration:.0f}s (<600s)")


# -- criterion 5: qualitative ranking ---------------------------------------

def test_criterion_5_qualitative_ranking(bench_runs):
    a_wins = sum(1 for r in bench_runs.values() if r.eer_dc_ae <= r.eer_nbow_ae)
    b_wins = sum(1 for r in bench_runs.values() if r.eer_dc_ae <= r.eer_dc_nnd)
    detail = "; ".join(
        f"seed {r.seed}: dc+ae={r.eer_dc_ae:.4f} nbow+ae={r.eer_nbow_ae:.4f} "
        f"dc+nnd={r.eer_dc_nnd:.4f}" for r in bench_runs.values())
    ok = a_wins >= 2 and b_wins >= 2
    report(5, "qualitative ranking", ok,
           f"(a) supervised<=nbow on {a_wins}/3, (b) ae<=nn-d on {b_wins}/3; {detail}")


# -- criterion 6: score separation ------------------------------------------

def test_criterion_6_score_separation(bench_runs):
    gaps = {seed: float(np.mean(r.result.scores_ood) - np.mean(r.result.scores_id))
            for seed, r in bench_runs.items()}
    ok = all(g > 0 for g in gaps.values())
    report(6, "score separation", ok,
           "; ".join(f"seed {s}: gap={g:.4f}" for s, g in gaps.items()))


# -- criterion 7: long-sentence effect --------------------------------------

def test_criterion_7_long_sentence_effect(long_sentence_runs):
    wins = sum(1 for _, lstm_eer, rnn_eer in long_sentence_runs
               if lstm_eer <= rnn_eer)
    detail = "; ".join(f"seed {s}: lstm={l:.4f} rnn={r:.4f}"
                       for s, l, r in long_sentence_runs)
    report(7, "long-sentence effect", wins >= 2, f"lstm<=rnn on {wins}/3; {detail}")


# -- criterion 8: determinism and persistence --------------------------------

def test_criterion_8_determinism_and_persistence(bench_runs, tmp_path):
    # save -> load -> rescore must be bit-exact
    run = bench_runs[42].result
    cls_path = tmp_path / "classifier.oodm"
    det_path = tmp_path / "detector.oodm"
    persist.save_classifier(cls_path, run.model, {"seed": 42})
    persist.save_autoencoder(det_path, run.autoencoder, run.threshold, {"seed": 42})
    model2, _ = persist.load_classifier(cls_path)
    ae2, _, _ = persist.load_autoencoder(det_path)
    sentences = (run.split.test_id + run.test_ood)[:100]
    before = np.array([run.autoencoder.score(run.model.embed_sentence(s.tokens))
                       for s in sentences])
    after = np.array([ae2.score(model2.embed_sentence(s.tokens))
                      for s in sentences])
    rescore_ok = np.array_equal(before, after)

    # identical config+seed -> byte-identical report CSVs (tiny CLI pipeline)
    synth_cfg = tmp_path / "synth.cfg"
    synth_cfg.write_text(
        "domains=3\nood_domains=1\nsentences_per_domain=20\n"
        "keywords_per_domain=6\nfunction_words=8\nlen_lo=3\nlen_hi=8\nseed=11\n")
    data_dir = tmp_path / "data"
    assert cli_main(["synth", "--config", str(synth_cfg), "--out", str(data_dir)]) == 0
    pipe_cfg = tmp_path / "pipe.cfg"
    pipe_cfg.write_text(
        f"corpus={data_dir}/id.tsv\nood={data_dir}/ood.txt\n"
        f"pretrain_text={data_dir}/pretrain.txt\n"
        f"model_dir={tmp_path}/models\nreport_dir={tmp_path}/reports\n"
        "hidden=16\nv=12\npretrain_epochs=2\nembed_epochs=3\n"
        "detect_epochs=20\nseed=11\n")
    snapshots = []
    for _ in range(2):
        for cmd in ("pretrain", "train-embed", "train-detect", "eval"):
            assert cli_main([cmd, "--config", str(pipe_cfg)]) == 0
        snapshots.append({p.name: p.read_bytes()
                          for p in (tmp_path / "reports").iterdir()})
    reports_ok = snapshots[0] == snapshots[1]

    ok = rescore_ok and reports_ok
    report(8, "determinism and persistence", ok,
           f"rescore bit-exact={rescore_ok}, reports byte-identical={reports_ok}")


# -- criterion 9: baseline oracles -------------------------------------------

def test_criterion_9_baseline_oracles(main_benchmark):
    _, id_sentences, ood_sentences, _ = main_benchmark
    train_sets = [set(s.tokens) for s in id_sentences[:100]]
    queries = [set(s.tokens) for s in (id_sentences[700:710] + ood_sentences[:10])]
    det = baselines.NearestNeighborDetector(train_sets, baselines.jaccard_distance)
    nn_d_ok = all(
        det.score(q) == nn_d_oracle(q, train_sets, baselines.jaccard_distance)
        for q in queries)

    jaccard_ok = (
        baselines.jaccard_distance({"a", "b"}, {"a", "b"}) == 0.0
        and baselines.jaccard_distance({"a"}, {"b"}) == 1.0
        and baselines.jaccard_distance({"a", "b", "c"}, {"b", "c", "d"}) == 0.5)

    index = baselines.NgramIndex(1).fit([["a", "b"], ["a", "c"], ["a", "d"]])
    vec = baselines.tfidf_vector(["a", "b"], index).to_dense(index.dim)
    tfidf_ok = vec[index.columns[("a",)]] == 0.0

    ok = nn_d_ok and jaccard_ok and tfidf_ok
    report(9, "baseline oracles", ok,
           f"nn-d oracle equality={nn_d_ok}, jaccard hand cases={jaccard_ok}, "
           f"all-document tf-idf zero={tfidf_ok}")
