import numpy as np
import pytest

from evact.bayesian import (DirichletPrediction, Ensemble, GaussianPosterior,
                            bridge_alpha, bridge_predictive, ensemble_predict,
                            ensemble_predict_batch, fit_laplace, ggn_precision,
                            laplace_bridge, logit_gaussian,
                            logit_gaussian_batch, probit_predictive,
                            read_ensemble, read_posterior, train_ensemble,
                            write_ensemble, write_posterior)
from evact.classifier import SoftmaxHead, TrainConfig, predict_proba, softmax
from evact.errors import EnsembleMemberError, PosteriorError
from evact.features import FeatureSequence


def seq(vectors, label, clip_id="c"):
    return FeatureSequence(np.asarray(vectors, np.float32), clip_id, label)


def toy_seqs(seed=0, n=15):
    rng = np.random.default_rng(seed)
    a = rng.normal([1.5, 0.5], 0.4, (n, 2))
    b = rng.normal([-1.0, -0.5], 0.4, (n, 2))
    return [seq(a, 0, "a"), seq(b, 1, "b")]


class TestFitLaplace:
    def test_binary_logistic_hessian_oracle(self):
        # K=2 softmax is binary logistic regression in the logit difference:
        # each class-diagonal precision block must equal X^T diag(q(1-q)) X
        # + lam*I, with q the class-1 probability computed independently via
        # the logistic sigmoid.
        x = np.array([[0.5, -1.0], [2.0, 0.3], [-0.7, 1.2]])
        w = np.array([[0.2, -0.4, 0.1], [-0.3, 0.6, -0.2]])
        head = SoftmaxHead(w)
        lam = 0.7
        post = fit_laplace(head, x, lam, mode="full")

        a = np.hstack([x, np.ones((3, 1))])
        z = a @ w.T
        q = 1.0 / (1.0 + np.exp(-(z[:, 1] - z[:, 0])))   # independent sigmoid
        d = q * (1.0 - q)
        oracle = a.T @ (d[:, None] * a) + lam * np.eye(3)

        precision = ggn_precision(head, x, lam, diagonal=False)
        for k in range(2):
            block = precision[k * 3:(k + 1) * 3, k * 3:(k + 1) * 3]
            np.testing.assert_allclose(block, oracle, rtol=1e-10)
        # and the covariance really is its inverse
        np.testing.assert_allclose(post.cov @ precision, np.eye(6), atol=1e-8)

    def test_zero_samples_gives_prior_covariance(self):
        head = SoftmaxHead(np.zeros((3, 4)))
        lam = 2.5
        post = fit_laplace(head, np.empty((0, 3)), lam, mode="full")
        np.testing.assert_allclose(post.cov, np.eye(12) / lam, atol=1e-12)
        diag_post = fit_laplace(head, np.empty((0, 3)), lam, mode="diag")
        np.testing.assert_allclose(diag_post.cov, np.full(12, 1.0 / lam))

    def test_ggn_matches_finite_difference_hessian(self):
        # for a linear softmax head the GGN equals the true Hessian of the
        # negative log posterior (cross-entropy sum + lam/2 ||theta||^2)
        rng = np.random.default_rng(1)
        for trial in range(3):
            k = int(rng.integers(2, 4))
            d = int(rng.integers(1, 4))
            n = 6
            x = rng.normal(size=(n, d))
            y = rng.integers(0, k, n)
            lam = 0.5
            w = rng.normal(0, 0.3, (k, d + 1))
            a = np.hstack([x, np.ones((n, 1))])

            def nlp(flat):
                ww = flat.reshape(k, d + 1)
                z = a @ ww.T
                z = z - z.max(axis=1, keepdims=True)
                logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
                return -logp[np.arange(n), y].sum() + 0.5 * lam * (flat ** 2).sum()

            flat = w.ravel()
            dim = flat.size
            eps = 1e-5
            fd = np.zeros((dim, dim))
            for i in range(dim):
                for j in range(dim):
                    pp = flat.copy(); pp[i] += eps; pp[j] += eps
                    pm = flat.copy(); pm[i] += eps; pm[j] -= eps
                    mp = flat.copy(); mp[i] -= eps; mp[j] += eps
                    mm = flat.copy(); mm[i] -= eps; mm[j] -= eps
                    fd[i, j] = (nlp(pp) - nlp(pm) - nlp(mp) + nlp(mm)) / (4 * eps * eps)
            ggn = ggn_precision(SoftmaxHead(w), x, lam, diagonal=False)
            scale = np.abs(fd).max()
            np.testing.assert_allclose(ggn, fd, atol=1e-3 * scale)

    def test_diag_mode_matches_full_diagonal(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(20, 3))
        head = SoftmaxHead(rng.normal(size=(4, 4)))
        full = ggn_precision(head, x, 1.0, diagonal=False)
        diag = ggn_precision(head, x, 1.0, diagonal=True)
        np.testing.assert_allclose(np.diag(full), diag, rtol=1e-12)

    def test_posterior_invariants_fuzz(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            k = int(rng.integers(2, 5))
            d = int(rng.integers(1, 5))
            x = rng.normal(size=(int(rng.integers(0, 30)), d))
            head = SoftmaxHead(rng.normal(size=(k, d + 1)))
            post = fit_laplace(head, x, 1.0, mode="full")
            cov = post.cov
            assert np.abs(cov - cov.T).max() <= 1e-10
            np.linalg.cholesky(cov)   # PD or raises

    def test_cholesky_failure_suggests_larger_lambda(self):
        head = SoftmaxHead(np.zeros((2, 3)))
        with pytest.raises(PosteriorError, match="lambda"):
            fit_laplace(head, np.empty((0, 2)), 1e-320, mode="full")


class TestLogitGaussian:
    def test_prior_covariance_variance(self):
        head = SoftmaxHead(np.zeros((3, 4)))
        lam = 2.0
        post = fit_laplace(head, np.empty((0, 3)), lam, mode="full")
        f = np.array([1.0, -2.0, 0.5])
        mu, var = logit_gaussian(post, f)
        norm2 = 1.0 + 4.0 + 0.25 + 1.0   # augmented with bias 1
        np.testing.assert_allclose(var, norm2 / lam, rtol=1e-12)

    def test_zero_feature_keeps_bias_variance(self):
        rng = np.random.default_rng(4)
        head = SoftmaxHead(rng.normal(size=(3, 4)))
        post = fit_laplace(head, rng.normal(size=(10, 3)), 1.0, mode="full")
        _, var = logit_gaussian(post, np.zeros(3))
        m = 4
        for k in range(3):
            block = post.cov[k * m:(k + 1) * m, k * m:(k + 1) * m]
            assert var[k] == pytest.approx(block[-1, -1], rel=1e-12)

    def test_mean_equals_head_logits(self):
        rng = np.random.default_rng(5)
        head = SoftmaxHead(rng.normal(size=(4, 6)))
        post = fit_laplace(head, rng.normal(size=(8, 5)), 1.0, mode="diag")
        f = rng.normal(size=5)
        mu, _ = logit_gaussian(post, f)
        np.testing.assert_array_equal(mu, head.logits(f))


class TestBridge:
    def test_symmetric_case_both_variants(self):
        # mu = 0, var = v: alpha_j = (1/v)(1 - 2/K + 1/K) for both variants
        for k in (2, 3, 10):
            for v in (0.5, 2.0):
                mu = np.zeros(k)
                var = np.full(k, v)
                expected = (1.0 - 2.0 / k + 1.0 / k) / v
                for variant in ("raw", "tempered"):
                    pred = laplace_bridge(mu, var, variant)
                    np.testing.assert_allclose(pred.alpha, expected, rtol=1e-12)
                    np.testing.assert_allclose(pred.predictive(), 1.0 / k, rtol=1e-12)

    def test_alpha_positive_and_simplex_fuzz(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            k = int(rng.integers(2, 11))
            mu = rng.normal(0, 3, k)
            var = np.exp(rng.uniform(np.log(1e-3), np.log(10), k))
            for variant in ("raw", "tempered"):
                pred = laplace_bridge(mu, var, variant)
                assert (pred.alpha > 0).all()
                p = pred.predictive()
                assert abs(p.sum() - 1.0) < 1e-12 and (p >= 0).all()

    def test_stabilization_handles_large_logits(self):
        mu = np.array([800.0, 0.0, -800.0])
        var = np.ones(3)
        p = bridge_predictive(mu, var, "raw")
        assert np.isfinite(p).all()

    def test_tempered_small_variance_limit_is_softmax(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            k = int(rng.integers(2, 11))
            mu = rng.normal(0, 2, k)
            p = bridge_predictive(mu, np.full(k, 1e-6), "tempered")
            np.testing.assert_allclose(p, softmax(mu), atol=1e-3)

    def test_tempered_monotone_convergence(self):
        rng = np.random.default_rng(8)
        mu = rng.normal(0, 2, 6)
        var0 = rng.uniform(0.5, 2.0, 6)
        gaps = []
        for s in (1e-2, 1e-4, 1e-6):
            p = bridge_predictive(mu, s * var0, "tempered")
            gaps.append(np.abs(p - softmax(mu)).sum())
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-3

    def test_raw_variant_is_global_scale_invariant(self):
        # the plain closed form's predictive cannot see a common variance
        # scale; this pins the known limitation the tempered variant fixes
        rng = np.random.default_rng(9)
        mu = rng.normal(0, 2, 5)
        var0 = rng.uniform(0.1, 2.0, 5)
        p1 = bridge_predictive(mu, var0, "raw")
        p2 = bridge_predictive(mu, 1000.0 * var0, "raw")
        np.testing.assert_allclose(p1, p2, rtol=1e-12)

    def test_k2_raw_mean_equals_softmax_for_shared_variance(self):
        # for K=2 the uniform-pull term vanishes, so under a shared variance
        # the raw Dirichlet mean reduces exactly to softmax of the means
        rng = np.random.default_rng(10)
        for _ in range(20):
            mu = rng.normal(0, 3, 2)
            var = np.full(2, np.exp(rng.uniform(np.log(1e-3), np.log(10))))
            p = laplace_bridge(mu, var, "raw").predictive()
            np.testing.assert_allclose(p, softmax(mu), rtol=1e-10)

    def test_non_positive_variance_rejected(self):
        with pytest.raises(PosteriorError):
            bridge_alpha(np.zeros(3), np.array([1.0, 0.0, 1.0]))

    def test_dirichlet_requires_positive_alpha(self):
        with pytest.raises(PosteriorError):
            DirichletPrediction(np.array([1.0, -0.1]))


class TestProbit:
    def test_zero_variance_is_softmax(self):
        rng = np.random.default_rng(11)
        mu = rng.normal(0, 2, 5)
        np.testing.assert_allclose(probit_predictive(mu, np.zeros(5)),
                                   softmax(mu), rtol=1e-12)

    def test_symmetric_means_uniform(self):
        # zero means stay uniform under any variances; equal nonzero means
        # need equal variances (each logit is scaled by its own factor)
        p = probit_predictive(np.zeros(4), np.array([0.1, 5.0, 2.0, 0.7]))
        np.testing.assert_allclose(p, 0.25, rtol=1e-12)
        p = probit_predictive(np.full(4, 1.3), np.full(4, 2.0))
        np.testing.assert_allclose(p, 0.25, rtol=1e-12)

    def test_large_variance_shrinks_toward_uniform(self):
        mu = np.array([2.0, 0.0])
        sharp = probit_predictive(mu, np.zeros(2))
        flat = probit_predictive(mu, np.full(2, 100.0))
        assert abs(flat[0] - 0.5) < abs(sharp[0] - 0.5)
        assert flat[0] > 0.5   # order preserved


class TestEnsemble:
    def test_single_member_equals_head(self):
        seqs = toy_seqs()
        cfg = TrainConfig(epochs=20, seed=5)
        ens = train_ensemble(seqs, cfg, s=1, base_seed=5)
        from evact.classifier import train
        head = train(seqs, cfg)
        f = np.array([0.3, -0.2])
        np.testing.assert_array_equal(ensemble_predict(ens, f, "point"),
                                      predict_proba(head, f[None])[0])

    def test_member_permutation_invariance(self):
        seqs = toy_seqs()
        ens = train_ensemble(seqs, TrainConfig(epochs=10), s=3, base_seed=0)
        rev = Ensemble(ens.members[::-1], ens.seeds[::-1])
        x = np.random.default_rng(12).normal(size=(4, 2))
        np.testing.assert_allclose(ensemble_predict_batch(ens, x),
                                   ensemble_predict_batch(rev, x), atol=1e-15)

    def test_identical_members_collapse(self):
        seqs = toy_seqs()
        from evact.classifier import train
        head = train(seqs, TrainConfig(epochs=10, seed=3))
        ens = Ensemble([head, head, head], [3, 3, 3])
        f = np.array([1.0, 1.0])
        np.testing.assert_allclose(ensemble_predict(ens, f, "point"),
                                   predict_frame_like(head, f), atol=1e-15)

    def test_two_opposite_members_average(self):
        w_a = np.zeros((2, 3)); w_a[0, 2] = 50.0    # always class 0
        w_b = np.zeros((2, 3)); w_b[1, 2] = 50.0    # always class 1
        ens = Ensemble([SoftmaxHead(w_a), SoftmaxHead(w_b)], [0, 1])
        p = ensemble_predict(ens, np.zeros(2), "point")
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-12)

    def test_bridge_mode_requires_posteriors(self):
        ens = Ensemble([SoftmaxHead(np.zeros((2, 3)))], [0])
        with pytest.raises(PosteriorError, match="posterior"):
            ensemble_predict(ens, np.zeros(2), "bridge")

    def test_bridge_tiny_variance_matches_point(self):
        seqs = toy_seqs()
        ens = train_ensemble(seqs, TrainConfig(epochs=15), s=2, base_seed=1,
                             laplace=True, lam=1e9, mode="full")
        # prior precision 1e9 makes every posterior variance ~1e-9
        x = np.random.default_rng(13).normal(size=(5, 2))
        p_point = ensemble_predict_batch(ens, x, "point")
        p_bridge = ensemble_predict_batch(ens, x, "bridge")
        np.testing.assert_allclose(p_bridge, p_point, atol=1e-3)

    def test_member_error_reports_index(self):
        seqs = toy_seqs()
        bad = TrainConfig(learning_rate=1e308, epochs=2)
        with pytest.raises(EnsembleMemberError, match="member 0"):
            train_ensemble(seqs, bad, s=2, base_seed=0)

    def test_default_size_is_32(self):
        from evact.bayesian import DEFAULT_ENSEMBLE_SIZE
        assert DEFAULT_ENSEMBLE_SIZE == 32

    def test_seeds_are_consecutive(self):
        seqs = toy_seqs()
        ens = train_ensemble(seqs, TrainConfig(epochs=2), s=3, base_seed=40)
        assert ens.seeds == [40, 41, 42]


def predict_frame_like(head, f):
    return predict_proba(head, f[None])[0]


class TestPosteriorIO:
    def test_round_trip_full_and_diag(self, tmp_path):
        seqs = toy_seqs()
        from evact.classifier import train
        head = train(seqs, TrainConfig(epochs=10, seed=2))
        for mode in ("full", "diag"):
            post = fit_laplace(head, seqs, 1.3, mode=mode)
            path = tmp_path / f"post_{mode}.lap"
            write_posterior(path, post)
            back = read_posterior(path)
            np.testing.assert_array_equal(back.mean, post.mean)
            np.testing.assert_array_equal(back.cov, post.cov)
            assert back.prior_precision == post.prior_precision
            assert back.is_diagonal == post.is_diagonal

    def test_ensemble_directory_round_trip(self, tmp_path):
        seqs = toy_seqs()
        ens = train_ensemble(seqs, TrainConfig(epochs=5), s=3, base_seed=7,
                             laplace=True, mode="diag")
        write_ensemble(tmp_path / "ens", ens)
        assert (tmp_path / "ens" / "member_1" / "model.smx").exists()
        assert (tmp_path / "ens" / "member_1" / "posterior.lap").exists()
        back = read_ensemble(tmp_path / "ens")
        assert back.seeds == ens.seeds
        x = np.random.default_rng(14).normal(size=(3, 2))
        np.testing.assert_allclose(ensemble_predict_batch(back, x, "bridge"),
                                   ensemble_predict_batch(ens, x, "bridge"),
                                   atol=1e-15)
