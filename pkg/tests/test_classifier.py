import csv

import numpy as np
import pytest

from evact.classifier import (SoftmaxHead, TrainConfig, balanced_class_weights,
                              loss_and_grad, predict_clip_accumulated,
                              predict_clip_mode, predict_frame, predict_proba,
                              read_model, train, write_model)
from evact.errors import ConfigError, TrainingDivergedError
from evact.features import FeatureSequence


def seq(vectors, label, clip_id="c"):
    return FeatureSequence(np.asarray(vectors, np.float32), clip_id, label)


def toy_separable(n_per_class=20, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal([2.0, 2.0], 0.3, (n_per_class, 2))
    b = rng.normal([-2.0, -2.0], 0.3, (n_per_class, 2))
    return [seq(a, 0, "a"), seq(b, 1, "b")]


class TestPredictFrame:
    def test_zero_weights_uniform(self):
        head = SoftmaxHead(np.zeros((4, 6)))
        p = predict_frame(head, np.ones(5))
        np.testing.assert_allclose(p, 0.25, atol=1e-15)

    def test_huge_logits_stable(self):
        w = np.zeros((3, 2))
        w[0, 0] = 1000.0
        head = SoftmaxHead(w)
        p = predict_frame(head, np.ones(1))
        assert p[0] == 1.0 and np.isfinite(p).all()

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=(5, 4))
        head = SoftmaxHead(w)
        shifted = SoftmaxHead(w + np.array([3.7]))
        f = rng.normal(size=3)
        # adding a constant to every logit cannot change the probabilities;
        # shifting all weights by a constant changes logits by c*(sum f + 1)
        np.testing.assert_allclose(predict_frame(head, f),
                                   predict_frame(shifted, f), atol=1e-12)

    def test_simplex_fuzz(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            k = int(rng.integers(2, 8))
            d = int(rng.integers(1, 10))
            head = SoftmaxHead(rng.normal(0, 5, (k, d + 1)))
            p = predict_frame(head, rng.normal(0, 5, d))
            assert abs(p.sum() - 1.0) < 1e-12
            assert (p >= 0).all()

    def test_dim_mismatch(self):
        head = SoftmaxHead(np.zeros((2, 4)))
        with pytest.raises(ValueError, match="dim"):
            predict_frame(head, np.zeros(5))


class TestClipRules:
    def head_with_argmax(self, picks, k=8):
        # logits chosen so frame i argmaxes at picks[i]
        vectors = np.eye(len(picks), dtype=np.float32)
        w = np.zeros((k, len(picks) + 1))
        for i, c in enumerate(picks):
            w[c, i] = 10.0
        return SoftmaxHead(w), FeatureSequence(vectors, "c", None)

    def test_mode(self):
        head, s = self.head_with_argmax([3, 3, 7])
        assert predict_clip_mode(head, s) == 3

    def test_mode_tie_lowest(self):
        head, s = self.head_with_argmax([1, 4])
        assert predict_clip_mode(head, s) == 1

    def test_agreement_case(self):
        head, s = self.head_with_argmax([5, 5, 5])
        assert predict_clip_mode(head, s) == 5
        assert predict_clip_accumulated(head, s) == 5

    def test_accumulated_hand_sum(self):
        # frames with p = (0.6, 0.4) and (0.1, 0.9): sums (0.7, 1.3) -> 1,
        # while the mode rule ties (one vote each) -> 0
        probs = np.array([[0.6, 0.4], [0.1, 0.9]])
        logits = np.log(probs)
        head = SoftmaxHead(np.hstack([logits.T, np.zeros((2, 1))]))
        s = FeatureSequence(np.eye(2, dtype=np.float32), "c", None)
        np.testing.assert_allclose(predict_proba(head, s.vectors), probs, atol=1e-12)
        assert predict_clip_accumulated(head, s) == 1
        assert predict_clip_mode(head, s) == 0

    def test_single_frame_equals_argmax(self):
        rng = np.random.default_rng(2)
        head = SoftmaxHead(rng.normal(size=(4, 3)))
        f = rng.normal(size=2).astype(np.float32)
        s = FeatureSequence(f[None, :], "c", None)
        expected = int(np.argmax(predict_frame(head, f)))
        assert predict_clip_mode(head, s) == expected
        assert predict_clip_accumulated(head, s) == expected

    def test_empty_sequence(self):
        head = SoftmaxHead(np.zeros((2, 3)))
        s = FeatureSequence(np.empty((0, 2), np.float32), "c", None)
        with pytest.raises(ValueError):
            predict_clip_mode(head, s)

    def test_rules_coincide_when_argmaxes_agree(self):
        # whenever every frame argmaxes the same class, both clip rules
        # must pick that class, whatever the probability profiles are
        rng = np.random.default_rng(7)
        for _ in range(20):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(1, 12))
            head = SoftmaxHead(rng.normal(0, 2, (k, 4)))
            vectors = rng.normal(0, 2, (n, 3)).astype(np.float32)
            s = FeatureSequence(vectors, "c", None)
            votes = np.argmax(predict_proba(head, vectors), axis=1)
            if len(set(votes.tolist())) == 1:
                c = int(votes[0])
                assert predict_clip_mode(head, s) == c
                assert predict_clip_accumulated(head, s) == c


class TestBalancedWeights:
    def test_formula(self):
        # counts (90, 10) -> weights prop to (1/90, 1/10), mean normalized to 1
        labels = np.array([0] * 90 + [1] * 10)
        w = balanced_class_weights(labels, 2)
        np.testing.assert_allclose(w, [0.2, 1.8], rtol=1e-12)
        assert w.mean() == pytest.approx(1.0)

    def test_missing_class_errors(self):
        with pytest.raises(ConfigError, match=r"classes \[2\]"):
            balanced_class_weights(np.array([0, 1, 1]), 3)


class TestGradient:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            k = int(rng.integers(2, 6))
            d = int(rng.integers(2, 11))
            n = 20
            x = rng.normal(size=(n, d))
            y = rng.integers(0, k, n)
            sw = rng.uniform(0.5, 2.0, n)
            w = rng.normal(0, 0.5, (k, d + 1))
            _, grad = loss_and_grad(w, x, y, sw)
            eps = 1e-6
            for _ in range(12):
                i = int(rng.integers(0, k))
                j = int(rng.integers(0, d + 1))
                wp = w.copy(); wp[i, j] += eps
                wm = w.copy(); wm[i, j] -= eps
                lp, _ = loss_and_grad(wp, x, y, sw)
                lm, _ = loss_and_grad(wm, x, y, sw)
                fd = (lp - lm) / (2 * eps)
                assert grad[i, j] == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_first_step_opposes_gradient_sign(self):
        # weight decay 0, one sample: the first optimizer step moves every
        # coordinate against its gradient sign
        x = np.array([[0.7, -1.3]])
        y = np.array([0])
        sw = np.ones(1)
        cfg = TrainConfig(weight_decay=0.0, epochs=1, batch_size=1, seed=7)
        rng = np.random.default_rng(cfg.seed)
        w0 = np.zeros((3, 3))
        w0[:, :-1] = rng.normal(0.0, cfg.init_scale, (3, 2))
        _, grad = loss_and_grad(w0, x, y, sw)
        head = train([seq(x, 0)], cfg, k=3)
        delta = head.weights - w0
        moved = np.abs(grad) > 1e-12
        assert (np.sign(delta[moved]) == -np.sign(grad[moved])).all()


class TestTraining:
    def test_separable_reaches_full_accuracy(self):
        seqs = toy_separable()
        head = train(seqs, TrainConfig(epochs=200, seed=0))
        x = np.vstack([s.vectors for s in seqs])
        y = np.array([0] * 20 + [1] * 20)
        acc = (np.argmax(predict_proba(head, x), axis=1) == y).mean()
        assert acc == 1.0

    def test_deterministic_given_seed(self):
        seqs = toy_separable()
        cfg = TrainConfig(epochs=30, seed=42)
        a = train(seqs, cfg)
        b = train(seqs, cfg)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_different_seeds_differ(self):
        seqs = toy_separable()
        a = train(seqs, TrainConfig(epochs=5, seed=1))
        b = train(seqs, TrainConfig(epochs=5, seed=2))
        assert not np.array_equal(a.weights, b.weights)

    def test_divergence_reports_epoch(self):
        # a step size near float max overflows the weights, after which the
        # logits are inf - inf = NaN
        seqs = toy_separable()
        with pytest.raises(TrainingDivergedError) as exc:
            train(seqs, TrainConfig(learning_rate=1e308, epochs=3, seed=0))
        assert exc.value.epoch >= 0

    def test_balanced_requires_all_classes(self):
        seqs = toy_separable()
        with pytest.raises(ConfigError):
            train(seqs, TrainConfig(class_weights="balanced"), k=3)

    def test_training_log(self, tmp_path):
        seqs = toy_separable()
        log = tmp_path / "log.csv"
        train(seqs, TrainConfig(epochs=4, seed=0), log_path=log,
              val_seqs=toy_separable(seed=9))
        with open(log) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 4
        assert set(rows[0]) == {"epoch", "loss", "train_acc", "val_acc"}
        assert float(rows[-1]["val_acc"]) > 0.5

    def test_inconsistent_dims_error(self):
        with pytest.raises(ConfigError, match="dims"):
            train([seq(np.zeros((2, 3)), 0), seq(np.zeros((2, 4)), 1)],
                  TrainConfig(epochs=1))


def test_model_file_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    head = SoftmaxHead(rng.normal(size=(6, 11)))
    path = tmp_path / "model.smx"
    write_model(path, head)
    back = read_model(path)
    np.testing.assert_array_equal(back.weights, head.weights)
