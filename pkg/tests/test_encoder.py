import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from snodri.encoder import (
    NetworkSpec,
    NetworkWeights,
    TrainConfig,
    TrainedEncoder,
    encode,
    forward,
    huber_loss,
    loss_and_grads,
    train_autoencoder,
)
from snodri.errors import DimensionMismatch, InsufficientData, NonFiniteLoss
from snodri.timeseries import DesignMatrix, MonthlySeries, MonthStamp, ZScoreParams

QUICK = TrainConfig(epochs=200, seed=1)


def design(X, start=MonthStamp(2000, 1)):
    mu, sd = X.mean(axis=0), X.std(axis=0)
    params = tuple(ZScoreParams(float(m), float(s)) for m, s in zip(mu, sd))
    return DesignMatrix(start, tuple(f"c{i}" for i in range(X.shape[1])), (X - mu) / sd, params)


def random_design(seed=0, n=60, d=4):
    return design(np.random.default_rng(seed).standard_normal((n, d)))


class TestForward:
    def test_zero_network(self):
        w = NetworkWeights.zeros(NetworkSpec(3))
        out, z = forward(w, np.ones((5, 3)))
        np.testing.assert_array_equal(z, 0.0)
        np.testing.assert_array_equal(out, 0.0)

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 1e3))
    def test_bottleneck_inside_unit_interval(self, seed, scale):
        rng = np.random.default_rng(seed)
        w = NetworkWeights.init_uniform(NetworkSpec(4), rng)
        _, z = forward(w, scale * rng.standard_normal((10, 4)))
        assert z.shape == (10, 1)
        assert np.all(np.abs(z) <= 1.0)

    def test_wrong_width(self):
        w = NetworkWeights.zeros(NetworkSpec(3))
        with pytest.raises(DimensionMismatch):
            forward(w, np.ones((2, 4)))

    def test_layer_sizes(self):
        assert NetworkSpec(9).layer_sizes == [9, 15, 1, 15, 9]

    def test_init_bounds(self):
        w = NetworkWeights.init_uniform(NetworkSpec(12), np.random.default_rng(0))
        for W, b in zip(w.Ws, w.bs):
            bound = 1.0 / np.sqrt(W.shape[1])
            assert np.all(np.abs(W) <= bound) and np.all(np.abs(b) <= bound)


class TestLoss:
    @pytest.mark.parametrize("r,expected", [(0.0, 0.0), (0.5, 0.125), (3.0, 2.5), (-3.0, 2.5)])
    def test_values(self, r, expected):
        assert huber_loss(r, 1.0) == expected

    def test_continuous_at_delta(self):
        d = 0.7
        assert huber_loss(d - 1e-12, d) == pytest.approx(huber_loss(d + 1e-12, d), abs=1e-11)

    def test_gradients_against_finite_differences(self):
        rng = np.random.default_rng(11)
        w = NetworkWeights.init_uniform(NetworkSpec(3), rng)
        X = 3.0 * rng.standard_normal((6, 3))
        _, grads = loss_and_grads(w, X, 0.5)
        numeric = oracles.central_difference(lambda: loss_and_grads(w, X, 0.5)[0], w.params())
        for g, n in zip(grads, numeric):
            np.testing.assert_allclose(g, n, rtol=1e-5, atol=1e-9)

    def test_row_permutation(self):
        rng = np.random.default_rng(2)
        w = NetworkWeights.init_uniform(NetworkSpec(5), rng)
        X = rng.standard_normal((30, 5))
        a, _ = loss_and_grads(w, X)
        b, _ = loss_and_grads(w, X[rng.permutation(30)])
        assert a == pytest.approx(b, rel=1e-14)


class TestTraining:
    def test_first_step_is_signed_learning_rate(self):
        dm = random_design()
        w0 = NetworkWeights.init_uniform(NetworkSpec(4), np.random.default_rng(7))
        _, g = loss_and_grads(w0, dm.values, 1.0)
        model = train_autoencoder(dm, TrainConfig(epochs=1, seed=7))
        for p0, gi, p1 in zip(w0.params(), g, model.weights.params()):
            # bias-corrected Adam moments after one step are g and g**2
            np.testing.assert_allclose(p1, p0 - 1e-3 * gi / (np.abs(gi) + 1e-8), rtol=0, atol=1e-15)

    def test_deterministic(self):
        dm = random_design(3)
        a, b = train_autoencoder(dm, QUICK), train_autoencoder(dm, QUICK)
        assert a.weights.equals(b.weights)
        np.testing.assert_array_equal(a.loss_history, b.loss_history)

    def test_loss_decreases(self):
        model = train_autoencoder(random_design(4), QUICK)
        assert model.loss_history[-1] < model.loss_history[0]
        assert model.loss_history.shape == (200,)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientData):
            train_autoencoder(random_design(n=20), QUICK)

    def test_non_finite_loss(self):
        X = np.full((30, 3), 1e308)
        X[::2] *= -1
        dm = DesignMatrix(MonthStamp(2000, 1), ("a", "b", "c"), X, tuple(ZScoreParams(0.0, 1.0) for _ in range(3)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(NonFiniteLoss):
                train_autoencoder(dm, QUICK)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(huber_delta=0.0)


@pytest.fixture(scope="module")
def model():
    return train_autoencoder(random_design(5), QUICK)


class TestEncodeAndPersist:
    def test_encode_design_matrix(self, model):
        dm = random_design(5)
        s = encode(model, dm)
        assert isinstance(s, MonthlySeries) and s.variable_id == "BOTTLENECK" and len(s) == 60
        _, z = forward(model.weights, dm.values)
        np.testing.assert_allclose(s.values, z[:, 0], rtol=0, atol=1e-15)

    def test_single_row(self, model):
        z = encode(model, np.zeros((1, 4)))
        assert z.shape == (1,) and -1 < z[0] < 1

    def test_unseen_rows_with_stored_params(self, model):
        raw = np.random.default_rng(99).standard_normal((20, 4))
        z = np.column_stack([p.apply(raw[:, k]) for k, p in enumerate(model.column_params)])
        out = encode(model, z)
        assert np.all(np.isfinite(out))

    def test_warns_on_raw_inputs(self, model):
        with pytest.warns(UserWarning):
            encode(model, 300.0 + np.random.default_rng(0).standard_normal((20, 4)))

    def test_column_mismatch(self, model):
        dm = random_design(5)
        other = DesignMatrix(dm.start, ("a", "b", "c", "d"), dm.values, dm.params)
        with pytest.raises(DimensionMismatch):
            encode(model, other)

    def test_round_trip_is_exact(self, model, tmp_path):
        model.metadata["note"] = "x"
        path = tmp_path / "m.json"
        model.save(path)
        back = TrainedEncoder.load(path)
        assert back.weights.equals(model.weights)
        assert back.column_params == model.column_params and back.config == model.config
        np.testing.assert_array_equal(back.loss_history, model.loss_history)
        assert back.dumps() == model.dumps()

    def test_rejects_foreign_document(self):
        with pytest.raises(ValueError):
            TrainedEncoder.from_dict({"format": "other"})
