import io

import numpy as np
import pytest

from oodkit import detector
from oodkit.detector import (
    Autoencoder,
    classify,
    deployment_threshold,
    far,
    find_eer,
    frr,
    reconstruction_error,
    sweep_thresholds,
    train_autoencoder,
)
from oodkit.mathcore import grad_check, make_rng
from oracles import brute_force_eer


class TestReconstructionError:
    def test_identical_is_zero(self):
        r = np.array([0.2, -0.4, 0.9])
        assert reconstruction_error(r, r) == 0.0

    def test_unit_basis_vs_zero(self):
        e1 = np.array([1.0, 0.0, 0.0, 0.0])
        assert reconstruction_error(e1, np.zeros(4)) == 1.0

    def test_nonnegative(self):
        rng = make_rng(0)
        for _ in range(20):
            a, b = rng.normal(size=6), rng.normal(size=6)
            assert reconstruction_error(a, b) >= 0.0


class TestAutoencoder:
    def test_odd_dim_rejected(self):
        with pytest.raises(ValueError):
            Autoencoder(7)

    def test_bottleneck_is_half(self):
        ae = Autoencoder(10)
        assert ae.W_enc.shape == (5, 10)
        assert ae.W_dec.shape == (10, 5)

    def test_forward_shapes_and_score(self):
        ae = Autoencoder(8, seed=1)
        r = make_rng(2).uniform(-0.9, 0.9, size=8)
        code, recon, score = ae.forward(r)
        assert code.shape == (4,)
        assert recon.shape == (8,)
        assert score >= 0.0
        assert np.all(np.abs(recon) < 1.0)  # tanh output layer

    def test_score_many_matches_single(self):
        ae = Autoencoder(6, seed=3)
        reps = make_rng(4).uniform(-0.9, 0.9, size=(5, 6)).astype(np.float32)
        many = ae.score_many(reps)
        singles = [ae.score(r) for r in reps]
        assert np.allclose(many, singles, rtol=1e-6)

    def test_gradients_match_finite_differences(self):
        ae = Autoencoder(8, seed=5, dtype=np.float64)
        reps = make_rng(6).uniform(-0.8, 0.8, size=(4, 8))
        _, grads = ae.batch_gradients(reps)
        err = grad_check(lambda: ae.batch_gradients(reps)[0],
                         ae.params(), grads, epsilon=1e-5)
        assert err < 1e-4

    def test_converges_on_repeated_vector(self):
        u = make_rng(7).uniform(-0.8, 0.8, size=10).astype(np.float32)
        with pytest.warns(UserWarning):
            ae = train_autoencoder(np.tile(u, (4, 1)), epochs=400, seed=1)
        assert ae.score(u) < 1e-3

    def test_mean_score_mostly_non_increasing(self):
        reps = make_rng(8).uniform(-0.7, 0.7, size=(40, 12)).astype(np.float32)
        ae = train_autoencoder(reps, epochs=60, seed=2)
        scores = [h["mean_score"] for h in ae.history]
        drops = sum(1 for a, b in zip(scores, scores[1:]) if b <= a + 1e-12)
        assert drops / (len(scores) - 1) >= 0.9

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            train_autoencoder(np.zeros((0, 4), dtype=np.float32), epochs=1)

    def test_deterministic(self):
        reps = make_rng(9).uniform(-0.7, 0.7, size=(20, 8)).astype(np.float32)
        a = train_autoencoder(reps, epochs=10, seed=5)
        b = train_autoencoder(reps, epochs=10, seed=5)
        assert a.W_enc.tobytes() == b.W_enc.tobytes()
        assert a.W_dec.tobytes() == b.W_dec.tobytes()


class _StubEmbedder:
    """Maps a one-token 'sentence' directly to a stored representation."""

    def __init__(self, table):
        self.table = table

    def embed_sentence(self, tokens):
        return self.table[tokens[0]]


class TestClassify:
    def _setup(self):
        rng = make_rng(11)
        u = rng.uniform(-0.6, 0.6, size=8).astype(np.float32)
        train = np.tile(u, (20, 1)) + rng.normal(0, 0.02, size=(20, 8)).astype(np.float32)
        ae = train_autoencoder(train, epochs=150, seed=3)
        table = {"near": u, "far": -u}
        return ae, _StubEmbedder(table)

    def test_zero_threshold_rejects_everything(self):
        ae, emb = self._setup()
        assert classify(["near"], emb, ae, 0.0).verdict == "OOD"
        assert classify(["far"], emb, ae, 0.0).verdict == "OOD"

    def test_infinite_threshold_accepts_everything(self):
        ae, emb = self._setup()
        assert classify(["near"], emb, ae, np.inf).verdict == "ID"
        assert classify(["far"], emb, ae, np.inf).verdict == "ID"

    def test_negative_threshold_rejected(self):
        ae, emb = self._setup()
        with pytest.raises(ValueError):
            classify(["near"], emb, ae, -1.0)

    def test_verdict_matches_score_rule(self):
        ae, emb = self._setup()
        res = classify(["near"], emb, ae, 0.5)
        assert res.verdict == ("ID" if res.score < 0.5 else "OOD")

    def test_trained_vectors_score_below_novel_vectors(self):
        hits = 0
        for seed in range(10):
            rng = make_rng(seed)
            center = rng.uniform(-0.5, 0.5, size=8).astype(np.float32)
            train = center + rng.normal(0, 0.05, size=(30, 8)).astype(np.float32)
            ae = train_autoencoder(np.clip(train, -0.95, 0.95),
                                   epochs=120, seed=seed)
            novel = rng.uniform(-0.9, 0.9, size=8).astype(np.float32)
            if ae.score(center) < ae.score(novel):
                hits += 1
        assert hits >= 9


class TestFarFrr:
    def test_separated(self):
        assert far([0.9, 1.0], 0.5) == 0.0
        assert frr([0.1, 0.2], 0.5) == 0.0

    def test_overlapping_hand_count(self):
        assert far([1.0, 2.0], 1.5) == 0.5
        assert frr([1.0, 2.0], 1.5) == 0.5

    def test_threshold_below_everything(self):
        assert far([1.0, 2.0], 0.0) == 0.0
        assert frr([1.0, 2.0], 0.0) == 1.0

    def test_empty_lists_rejected(self):
        with pytest.raises(ValueError):
            far([], 1.0)
        with pytest.raises(ValueError):
            frr([], 1.0)

    def test_monotonicity_in_threshold(self):
        rng = make_rng(13)
        scores_id = rng.uniform(0, 2, size=50)
        scores_ood = rng.uniform(0, 2, size=60)
        grid = np.sort(rng.uniform(-0.5, 2.5, size=40))
        fars = [far(scores_ood, t) for t in grid]
        frrs = [frr(scores_id, t) for t in grid]
        assert all(a <= b for a, b in zip(fars, fars[1:]))
        assert all(a >= b for a, b in zip(frrs, frrs[1:]))


class TestFindEer:
    def test_separated_lists_give_zero(self):
        curve = find_eer([0.1, 0.2], [0.9, 1.0])
        assert curve.eer == 0.0

    def test_identical_lists_hand_case(self):
        curve = find_eer([1.0, 2.0], [1.0, 2.0])
        assert curve.eer == 0.5
        assert curve.eer_threshold == 1.5

    def test_candidate_count_is_2n_plus_1(self):
        scores_id = [0.1, 0.5, 0.9]
        scores_ood = [0.3, 0.5]
        n_distinct = len({0.1, 0.5, 0.9, 0.3})
        assert len(sweep_thresholds(scores_id, scores_ood)) == 2 * n_distinct + 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            find_eer([], [1.0])
        with pytest.raises(ValueError):
            find_eer([1.0], [])

    def test_matches_brute_force_oracle(self):
        rng = make_rng(21)
        for trial in range(100):
            n_id = int(rng.integers(2, 200))
            n_ood = int(rng.integers(2, 200))
            if trial % 3 == 0:
                # coarse grids force exact FAR == FRR hits and ties
                scores_id = rng.integers(0, 6, size=n_id).astype(float)
                scores_ood = rng.integers(0, 6, size=n_ood).astype(float)
            else:
                scores_id = rng.normal(size=n_id)
                scores_ood = rng.normal(0.5, 1.0, size=n_ood)
            curve = find_eer(scores_id, scores_ood)
            eer, thr = brute_force_eer(scores_id, scores_ood)
            assert curve.eer == eer
            assert curve.eer_threshold == thr

    def test_same_distribution_gives_half(self):
        rng = make_rng(0)
        for _ in range(50):
            a = rng.normal(size=200)
            b = rng.normal(size=200)
            assert abs(find_eer(a, b).eer - 0.5) <= 0.08

    def test_curve_far_frr_monotone(self):
        rng = make_rng(33)
        curve = find_eer(rng.uniform(0, 1, 30), rng.uniform(0, 1, 30))
        assert np.all(np.diff(curve.far) >= 0)
        assert np.all(np.diff(curve.frr) <= 0)


class TestCurveCsv:
    def test_format(self):
        curve = find_eer([1.0, 2.0], [1.0, 2.0])
        buf = io.StringIO()
        curve.write_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "threshold,far,frr"
        assert lines[-1].startswith("# eer=0.5 at threshold=1.5")
        assert len(lines) == 2 + len(curve.thresholds)
        for row in lines[1:-1]:
            t, fa, fr = row.split(",")
            float(t), float(fa), float(fr)


class TestDeploymentThreshold:
    def test_percentile_hand_case(self):
        # linear interpolation between the order statistics of [0, 1]
        assert deployment_threshold([0.0, 1.0]) == pytest.approx(0.95)

    def test_signature_never_sees_ood(self):
        scores = make_rng(1).uniform(0, 1, size=200)
        t = deployment_threshold(scores)
        assert frr(scores, t) == pytest.approx(0.05, abs=0.02)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            deployment_threshold([])
