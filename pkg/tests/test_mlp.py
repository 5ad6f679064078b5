import math

import numpy as np
import pytest

from goalrec.mlp import (
    AdamState,
    MlpGoalClassifier,
    MlpModel,
    TrainConfig,
    adam_step,
    backward,
    cross_entropy,
    forward,
    init_model,
    load_model,
    predict_goal,
    save_model,
    train,
    _forward_cache,
)
from sklearn.exceptions import NotFittedError


# ---------------------------------------------------------------------------
# Finite-difference gradient oracle
# ---------------------------------------------------------------------------

def numerical_gradients(model, X, y, h=1e-5):
    """Central finite differences of the mean cross-entropy loss."""
    grads = []
    for param in model.weights + model.biases:
        grad = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = param[idx]
            param[idx] = original + h
            up = cross_entropy(forward(model, X), y)
            param[idx] = original - h
            down = cross_entropy(forward(model, X), y)
            param[idx] = original
            grad[idx] = (up - down) / (2 * h)
            it.iternext()
        grads.append(grad)
    return grads


def random_safe_model(rng, max_units=16, margin=1e-3):
    """Random small model+batch whose pre-activations stay off the ReLU kink.

    Finite differences straddle the kink when a pre-activation sits within h
    of zero, so sampling retries until all units clear a margin.
    """
    for _ in range(200):
        n_layers = int(rng.integers(1, 4))
        sizes = [int(rng.integers(2, max_units + 1)) for _ in range(n_layers + 1)]
        model = init_model(sizes, seed=int(rng.integers(2**31)))
        for w in model.weights:
            w += rng.normal(scale=0.3, size=w.shape)
        for b in model.biases:
            b += rng.normal(scale=0.3, size=b.shape)
        X = rng.normal(size=(int(rng.integers(1, 5)), sizes[0]))
        y = rng.integers(0, sizes[-1], size=len(X))
        a = X
        safe = True
        for i in range(len(model.weights) - 1):
            z = a @ model.weights[i] + model.biases[i]
            if np.abs(z).min() < margin:
                safe = False
                break
            a = np.maximum(z, 0.0)
        if safe:
            return model, X, y
    raise AssertionError("could not sample a kink-free model")


class TestInit:
    def test_navigation_architecture(self):
        model = init_model([20, 200, 200, 200, 200, 5], seed=0)
        assert len(model.weights) == 5
        assert model.layer_sizes == [20, 200, 200, 200, 200, 5]
        assert model.weights[0].shape == (20, 200)
        assert model.weights[-1].shape == (200, 5)

    def test_task_architecture(self):
        model = init_model([48, 256, 32, 5], seed=1)
        assert len(model.weights) == 3
        assert [w.shape for w in model.weights] == [(48, 256), (256, 32), (32, 5)]

    def test_seed_determinism(self):
        a = init_model([8, 16, 3], seed=7)
        b = init_model([8, 16, 3], seed=7)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_glorot_bounds_and_zero_bias(self):
        model = init_model([50, 30, 2], seed=3)
        limit = math.sqrt(6 / (50 + 30))
        assert np.abs(model.weights[0]).max() <= limit
        assert (model.biases[0] == 0).all() and (model.biases[1] == 0).all()

    def test_zero_size_layer_rejected(self):
        with pytest.raises(ValueError):
            init_model([4, 0, 2], seed=0)
        with pytest.raises(ValueError):
            init_model([4], seed=0)

    def test_dimension_chain_validated(self):
        with pytest.raises(ValueError):
            MlpModel(
                weights=[np.zeros((3, 4)), np.zeros((5, 2))],
                biases=[np.zeros(4), np.zeros(2)],
            )


class TestForward:
    def test_zero_model_gives_uniform(self):
        model = MlpModel(
            weights=[np.zeros((6, 4))], biases=[np.zeros(4)], drop_rates=[]
        )
        probs = forward(model, np.ones(6))
        np.testing.assert_allclose(probs, [0.25] * 4)

    def test_hand_computed_linear_softmax(self):
        model = MlpModel(
            weights=[np.array([[1.0, -1.0], [2.0, 0.5]])],
            biases=[np.array([0.1, -0.1])],
        )
        probs = forward(model, np.array([1.0, 0.0]))
        z = np.array([1.1, -1.1])
        want = np.exp(z) / np.exp(z).sum()
        np.testing.assert_allclose(probs, want, atol=1e-15)

    def test_random_model_outputs_distribution(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            model, X, _ = random_safe_model(rng)
            probs = forward(model, X)
            assert (probs > 0).all() and (probs < 1).all()
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_dimension_mismatch(self):
        model = init_model([4, 3], seed=0)
        with pytest.raises(ValueError):
            forward(model, np.ones(5))

    def test_train_mode_without_rng_rejected_when_dropping(self):
        model = init_model([4, 8, 3], seed=0, drop_rate=0.5)
        with pytest.raises(ValueError):
            forward(model, np.ones(4), train=True)


class TestLoss:
    def test_perfect_prediction(self):
        assert cross_entropy(np.array([0.0, 1.0, 0.0]), np.array([1])) == 0.0

    def test_uniform_is_log_n(self):
        probs = np.full(5, 0.2)
        assert cross_entropy(probs, np.array([3])) == pytest.approx(math.log(5), abs=1e-12)

    def test_quarter_is_log4(self):
        probs = np.array([0.25, 0.75])
        assert cross_entropy(probs, np.array([0])) == pytest.approx(math.log(4), abs=1e-12)

    def test_clamp_avoids_log_zero(self):
        probs = np.array([0.0, 1.0])
        assert np.isfinite(cross_entropy(probs, np.array([0])))


class TestBackward:
    def test_output_gradient_is_probs_minus_onehot(self):
        model = init_model([3, 4], seed=2)
        x = np.array([0.5, -1.0, 2.0])
        y = np.array([2])
        grad_w, grad_b, probs = backward(model, x, y)
        signal = probs[0].copy()
        signal[2] -= 1.0
        np.testing.assert_allclose(grad_b[0], signal, atol=1e-12)
        np.testing.assert_allclose(grad_w[0], np.outer(x, signal), atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(20):
            model, X, y = random_safe_model(rng)
            grad_w, grad_b, _ = backward(model, X, y)
            numeric = numerical_gradients(model, X, y)
            analytic = grad_w + grad_b
            for a, n in zip(analytic, numeric):
                denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
                worst = max(worst, float((np.abs(a - n) / denom).max()))
        assert worst < 1e-4

    def test_dead_relu_unit_gets_zero_gradient(self):
        model = init_model([2, 3, 2], seed=0)
        model.biases[0][:] = [-100.0, 1.0, 1.0]  # unit 0 is dead for small inputs
        x = np.array([0.1, 0.1])
        grad_w, _, _ = backward(model, x, np.array([0]))
        np.testing.assert_allclose(grad_w[0][:, 0], 0.0)

    def test_gradients_flow_through_dropout_mask(self):
        model = init_model([3, 8, 2], seed=1, drop_rate=0.5)
        x = np.ones(3)
        rng = np.random.default_rng(9)
        grad_w, _, _ = backward(model, x, np.array([1]), train=True, rng=rng)
        # recompute the mask with the same stream: dropped units contribute
        # nothing to the output-layer weight gradient rows
        rng2 = np.random.default_rng(9)
        _, _, drop_masks, _ = _forward_cache(model, x[None, :], True, rng2)
        dropped = drop_masks[0][0] == 0.0
        assert dropped.any()
        np.testing.assert_allclose(grad_w[1][dropped, :], 0.0)


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        p = np.array([1.5, -2.0])
        state = AdamState.for_params([p])
        adam_step(state, [p], [np.zeros(2)])
        np.testing.assert_array_equal(p, [1.5, -2.0])
        assert (state.m[0] == 0).all() and (state.v[0] == 0).all()

    def test_first_step_scalar_update(self):
        # m1-hat = 1, v1-hat = 1 from the recurrences, so the update is
        # exactly -lr / (1 + eps).
        p = np.array([0.0])
        state = AdamState.for_params([p])
        adam_step(state, [p], [np.array([1.0])])
        want = -state.lr / (1.0 + state.eps)
        assert p[0] == pytest.approx(want, abs=1e-12)

    def test_constant_gradient_step_size_approaches_lr(self):
        p = np.array([0.0])
        state = AdamState.for_params([p])
        previous = p[0]
        for _ in range(100):
            adam_step(state, [p], [np.array([1.0])])
            step = previous - p[0]
            previous = p[0]
        assert step == pytest.approx(state.lr, rel=0.01)

    def test_shape_mismatch_rejected(self):
        p = np.zeros(3)
        state = AdamState.for_params([p])
        with pytest.raises(ValueError):
            adam_step(state, [p], [np.zeros(4)])


class TestDropout:
    def test_inverted_dropout_preserves_expectation(self):
        model = init_model([5, 12, 3], seed=4, drop_rate=0.2)
        for w in model.weights:
            w += 0.3
        x = np.ones((1, 5))
        infer_hidden = np.maximum(x @ model.weights[0] + model.biases[0], 0.0)[0]
        rng = np.random.default_rng(123)
        total = np.zeros_like(infer_hidden)
        samples = 10_000
        for _ in range(samples):
            inputs, _, _, _ = _forward_cache(model, x, True, rng)
            total += inputs[1][0]
        average = total / samples
        big = infer_hidden > 0.05
        assert big.any()
        np.testing.assert_allclose(average[big], infer_hidden[big], rtol=0.02)


def toy_separable(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    X[y == 1] += 2.5
    X[y == 0] -= 2.5
    return X, y


class TestTrain:
    def test_separable_set_reaches_full_accuracy(self):
        X, y = toy_separable()
        model = init_model([2, 8, 2], seed=0)
        model, losses = train(model, X, y, TrainConfig(epochs=15, batch_size=4, seed=0))
        preds = forward(model, X).argmax(axis=1)
        assert (preds == y).mean() == 1.0
        assert losses[-1] < losses[0]

    def test_zero_epochs_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)

    def test_empty_dataset_rejected(self):
        model = init_model([2, 2], seed=0)
        with pytest.raises(ValueError):
            train(model, np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_bit_identical_given_seed(self):
        X, y = toy_separable(seed=5)
        runs = []
        for _ in range(2):
            model = init_model([2, 16, 2], seed=3, drop_rate=0.2)
            model, losses = train(model, X, y, TrainConfig(epochs=5, batch_size=4, seed=11))
            runs.append((model, losses))
        for wa, wb in zip(runs[0][0].weights, runs[1][0].weights):
            assert np.array_equal(wa, wb)
        assert runs[0][1] == runs[1][1]

    def test_config_drop_rate_override(self):
        X, y = toy_separable()
        model = init_model([2, 4, 2], seed=0, drop_rate=0.0)
        train(model, X, y, TrainConfig(epochs=1, drop_rate=0.3))
        assert model.drop_rates == [0.3]


class TestPredictGoal:
    def test_clear_argmax(self):
        rng = np.random.default_rng(0)
        assert predict_goal(np.array([0.1, 0.7, 0.2]), rng) == 1

    def test_single_goal(self):
        rng = np.random.default_rng(0)
        assert predict_goal(np.array([1.0]), rng) == 0

    def test_tie_break_is_uniform(self):
        rng = np.random.default_rng(2024)
        counts = [0, 0]
        for _ in range(10_000):
            counts[predict_goal(np.array([0.5, 0.5]), rng)] += 1
        assert abs(counts[0] - 5000) <= 150


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        model = init_model([6, 10, 4], seed=8, drop_rate=0.1)
        X, y = toy_separable()
        Xp = np.hstack([X, X, X])
        train(model, Xp, y % 4, TrainConfig(epochs=2, seed=1))
        path = tmp_path / "model.json"
        save_model(model, path, train_seed=1, extra={"max_obs": 3})
        loaded, meta = load_model(path)
        assert meta["train_seed"] == 1
        assert meta["extra"] == {"max_obs": 3}
        assert loaded.layer_sizes == model.layer_sizes
        assert loaded.drop_rates == model.drop_rates
        for a, b in zip(model.weights + model.biases, loaded.weights + loaded.biases):
            assert np.array_equal(a, b)

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text("{}")
        with pytest.raises(ValueError):
            load_model(path)


class TestMlpGoalClassifier:
    def test_fit_predict_separable(self):
        X, y = toy_separable(n=80, seed=2)
        clf = MlpGoalClassifier(
            hidden_layer_sizes=(16,), epochs=15, batch_size=8, drop_rate=0.0, random_state=0
        )
        clf.fit(X, y)
        assert (clf.predict(X) == y).mean() >= 0.95
        probs = clf.predict_proba(X)
        assert probs.shape == (80, 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            MlpGoalClassifier().predict_proba(np.zeros((1, 4)))

    def test_deterministic_across_instances(self):
        X, y = toy_separable(seed=9)
        a = MlpGoalClassifier(hidden_layer_sizes=(8,), epochs=3, random_state=5).fit(X, y)
        b = MlpGoalClassifier(hidden_layer_sizes=(8,), epochs=3, random_state=5).fit(X, y)
        for wa, wb in zip(a.model_.weights, b.model_.weights):
            assert np.array_equal(wa, wb)
        assert a.loss_trace_ == b.loss_trace_

    def test_get_params_roundtrip(self):
        clf = MlpGoalClassifier(hidden_layer_sizes=(256, 32), epochs=7)
        params = clf.get_params()
        assert params["hidden_layer_sizes"] == (256, 32)
        clone = MlpGoalClassifier(**params)
        assert clone.epochs == 7
