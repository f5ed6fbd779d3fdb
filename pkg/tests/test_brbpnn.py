import math

import numpy as np
import pytest

from bbcount import brbpnn
from bbcount.experiment import ExperimentConfig, train_one
from bbcount.traces import SplitMode


def random_model(rng, n_inputs=2, hidden=3):
    return brbpnn.init_model(n_inputs, hidden=hidden, rng=rng)


class TestTansig:
    def test_odd_at_zero(self):
        assert brbpnn.tansig(0.0) == 0.0

    def test_direct_value(self):
        want = 2.0 / (1.0 + math.exp(-2.0)) - 1.0
        assert brbpnn.tansig(1.0) == pytest.approx(want, abs=1e-15)
        assert brbpnn.tansig(1.0) == pytest.approx(0.761594, abs=1e-6)

    def test_identical_to_tanh(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-20, 20, size=1000)
        np.testing.assert_allclose(brbpnn.tansig(x), np.tanh(x), atol=1e-12)

    def test_saturates_without_error(self):
        assert brbpnn.tansig(1e6) == 1.0
        assert brbpnn.tansig(-1e6) == -1.0


class TestObjective:
    def test_perfect_fit_zero_alpha(self):
        model = brbpnn.BrbpnnModel(
            W1=np.zeros((1, 1)), b1=np.zeros(1), W2=np.zeros(1), b2=0.5,
            alpha=0.0, beta=1.0,
        )
        X = np.array([[1.0], [2.0]])
        y = np.array([0.5, 0.5])
        f, e_d, e_w = brbpnn.objective(model, X, y)
        assert f == 0.0 and e_d == 0.0

    def test_zero_weights_zero_ew(self):
        model = brbpnn.BrbpnnModel(
            W1=np.zeros((1, 2)), b1=np.zeros(1), W2=np.zeros(1), b2=0.0,
            alpha=1.0, beta=0.0,
        )
        f, _, e_w = brbpnn.objective(model, np.ones((3, 2)), np.ones(3))
        assert e_w == 0.0 and f == 0.0

    def test_direct_value(self):
        # one sample with residual 0.5, weights {0.3, -0.4}: F = 2*0.25 + 1*0.25
        model = brbpnn.BrbpnnModel(
            W1=np.array([[0.3]]), b1=np.zeros(1), W2=np.array([-0.4]), b2=0.0,
            alpha=1.0, beta=2.0,
        )
        X = np.array([[0.0]])
        y_hat = brbpnn.forward(model, X)[0]
        y = np.array([y_hat + 0.5])
        f, e_d, e_w = brbpnn.objective(model, X, y)
        assert e_d == pytest.approx(0.25, abs=1e-15)
        assert e_w == pytest.approx(0.25, abs=1e-15)
        assert f == pytest.approx(0.75, abs=1e-14)


class TestJacobian:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        h = 1e-6
        for _ in range(30):
            n_inputs = int(rng.integers(1, 4))
            hidden = int(rng.integers(1, 4))
            model = random_model(rng, n_inputs=n_inputs, hidden=hidden)
            X = rng.uniform(-1, 1.5, size=(int(rng.integers(2, 7)), n_inputs))
            J = brbpnn.jacobian(model, X)
            w = brbpnn.pack(model)
            numeric = np.empty_like(J)
            for i in range(w.size):
                for sign in (+1, -1):
                    bumped = w.copy()
                    bumped[i] += sign * h
                    brbpnn.unpack(model, bumped)
                    out = brbpnn.forward(model, X)
                    if sign > 0:
                        plus = out
                    else:
                        minus = out
                numeric[:, i] = (plus - minus) / (2 * h)
                brbpnn.unpack(model, w)
            scale = np.maximum(np.abs(numeric), 1e-6)
            assert (np.abs(J - numeric) / scale).max() <= 1e-4


class TestLmStep:
    def test_gauss_newton_exact_for_linear_residuals(self):
        # 2-parameter linear least squares: one undamped step lands on the optimum
        rng = np.random.default_rng(3)
        X = np.column_stack([np.ones(12), rng.uniform(0, 5, 12)])
        y = 3.0 - 2.0 * X[:, 1] + rng.normal(0, 0.3, 12)
        w = np.array([0.0, 0.0])
        residuals = X @ w - y
        delta = brbpnn.solve_damped(X, residuals, w, alpha=0.0, beta=1.0, mu=1e-12)
        optimum, *_ = np.linalg.lstsq(X, y, rcond=None)
        np.testing.assert_allclose(w + delta, optimum, rtol=1e-8, atol=1e-9)

    def test_rejected_trial_keeps_weights_and_grows_mu(self):
        # at a perfect fit the step is zero, F cannot decrease: guaranteed rejection
        model = brbpnn.BrbpnnModel(
            W1=np.zeros((1, 1)), b1=np.zeros(1), W2=np.zeros(1), b2=0.25,
            alpha=0.0, beta=1.0,
        )
        X = np.array([[0.0], [1.0]])
        y = np.array([0.25, 0.25])
        state = brbpnn.LmState(mu=0.005)
        before = brbpnn.pack(model).copy()
        accepted = brbpnn.lm_trial(model, state, X, y, brbpnn.LmConfig())
        assert not accepted
        np.testing.assert_array_equal(brbpnn.pack(model), before)
        assert state.mu == pytest.approx(0.005 * 10.0)

    def test_accepted_trial_strictly_decreases_f(self):
        rng = np.random.default_rng(5)
        model = random_model(rng, n_inputs=1, hidden=1)
        X = np.linspace(0, 1, 15).reshape(-1, 1)
        y = 1.5 * X.ravel() + 0.25
        state = brbpnn.LmState(mu=0.005)
        f_before, _, _ = brbpnn.objective(model, X, y)
        accepted = brbpnn.lm_step(model, state, X, y, brbpnn.LmConfig())
        f_after, _, _ = brbpnn.objective(model, X, y)
        assert accepted
        assert f_after < f_before

    def test_stall_returns_false_at_mu_max(self):
        model = brbpnn.BrbpnnModel(
            W1=np.zeros((1, 1)), b1=np.zeros(1), W2=np.zeros(1), b2=0.0,
            alpha=0.0, beta=1.0,
        )
        X = np.array([[0.0], [1.0]])
        y = np.array([0.0, 0.0])  # already perfectly fit: F = 0, no decrease possible
        state = brbpnn.LmState(mu=0.005)
        accepted = brbpnn.lm_step(model, state, X, y, brbpnn.LmConfig())
        assert not accepted
        assert state.mu > brbpnn.LmConfig().mu_max


class TestEvidenceUpdate:
    def test_gamma_within_bounds(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n, p = int(rng.integers(2, 20)), int(rng.integers(1, 8))
            J = rng.normal(size=(n, p))
            update = brbpnn.evidence_update(
                e_d=float(rng.uniform(0.01, 5)),
                e_w=float(rng.uniform(0.01, 5)),
                jtj=J.T @ J,
                alpha=float(rng.uniform(1e-6, 10)),
                beta=float(rng.uniform(1e-6, 10)),
                n_samples=n,
            )
            assert 0.0 <= update.gamma <= p

    def test_zero_ew_pins_alpha(self):
        J = np.ones((4, 2))
        update = brbpnn.evidence_update(1.0, 0.0, J.T @ J, 1.0, 1.0, 4)
        assert update.pinned
        assert update.alpha == brbpnn.HYPER_MAX

    def test_zero_ed_pins_beta(self):
        J = np.ones((4, 2))
        update = brbpnn.evidence_update(0.0, 1.0, J.T @ J, 1.0, 1.0, 4)
        assert update.pinned
        assert update.beta == brbpnn.HYPER_MAX

    def test_gamma_drifts_to_zero_on_noise(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(0, 1, size=(40, 1))
        y = rng.normal(0, 1, 40)
        model, history = brbpnn.train(X, y, hidden=1, seed=2)
        assert history[-1].gamma < 0.1 * model.n_params

    def test_smoothness_ratio_trend(self):
        # larger fixed alpha/beta leaves a smaller final weight norm
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, size=(30, 1))
        y = 1.5 * X.ravel() + rng.normal(0, 0.05, 30)
        e_ws = []
        for ratio in (0.01, 1.0, 100.0):
            model, _ = brbpnn.train(
                X, y, hidden=1, seed=3, estimate_hyperparams=False,
                alpha0=ratio, beta0=1.0,
            )
            _, _, e_w = brbpnn.objective(model, X, y)
            e_ws.append(e_w)
        assert e_ws[0] > e_ws[1] > e_ws[2]


class TestTrain:
    def test_linear_data_one_neuron(self):
        X = np.linspace(0, 1, 25).reshape(-1, 1)
        y = 2.0 * X.ravel()
        model, history = brbpnn.train(X, y, hidden=1, seed=0)
        residuals = brbpnn.forward(model, X) - y
        assert float(np.mean(residuals**2)) <= 1e-3
        assert len(history) <= 1000

    def test_accepted_epochs_monotone_f(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(0, 1, size=(30, 2))
        y = X[:, 0] * X[:, 1]
        _, history = brbpnn.train(X, y, hidden=2, seed=1)
        for record in history:
            assert record.f_after < record.f_before

    def test_seeded_determinism(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 1, size=(20, 1))
        y = X.ravel() ** 2
        model_a, hist_a = brbpnn.train(X, y, hidden=1, seed=5)
        model_b, hist_b = brbpnn.train(X, y, hidden=1, seed=5)
        assert hist_a == hist_b
        np.testing.assert_array_equal(model_a.W1, model_b.W1)

    def test_regularization_shrinks_weights_on_noisy_data(self):
        X = np.linspace(0, 1, 20).reshape(-1, 1)
        y = 2.0 * X.ravel() + np.random.default_rng(5).normal(0, 0.2, 20)
        model_br, _ = brbpnn.train(X, y, hidden=1, seed=1)
        model_bare, _ = brbpnn.train(
            X, y, hidden=1, seed=1, estimate_hyperparams=False, alpha0=0.0
        )
        _, _, e_w_br = brbpnn.objective(model_br, X, y)
        _, _, e_w_bare = brbpnn.objective(model_bare, X, y)
        assert e_w_br < e_w_bare

    def test_hidden_size_ten_supported(self):
        rng = np.random.default_rng(10)
        X = rng.uniform(0, 1, size=(40, 1))
        y = np.sin(3 * X.ravel())
        model, _ = brbpnn.train(X, y, hidden=10, seed=0)
        assert model.hidden == 10
        assert model.n_params == 10 + 10 + 10 + 1

    def test_bilinear_one_neuron_worse_than_pnn(self, bilinear_series):
        # the non-linear ordering: a one-neuron regression underfits the
        # product surface while the ten-unit rate network tracks it
        cfg = ExperimentConfig(
            split_mode=SplitMode.HIGH_LOW, seed=0, pnn_epochs=2000
        )
        pnn_mse, br_mse = [], []
        for series in bilinear_series:
            r_pnn = train_one(series, "pnn", cfg)
            r_br = train_one(series, "brbpnn", cfg)
            assert r_pnn.error is None and r_br.error is None
            pnn_mse.append(r_pnn.mse)
            br_mse.append(r_br.mse)
        assert float(np.mean(br_mse)) > float(np.mean(pnn_mse))
