"""Tests for splits, normalization and model training"""

from dataclasses import replace

import numpy as np
import pytest

from ledgertopo.config import FEATURE_COLUMNS
from ledgertopo.forecaster.lstm import LSTMParams, mse_loss
from ledgertopo.forecaster.training import (
    ModelConfig,
    Normalizer,
    SplitPlan,
    WindowSet,
    clip_gradients,
    lstm_predict,
    optimize,
    refit,
    train,
)
from ledgertopo.utils.exceptions import (
    InputValidationError,
    InvalidConfigError,
    TrainingError,
    WindowShapeError,
)
from tests.helpers.factories import feature_rows, tiny_model_config


class TestSplitPlan:
    """Chronological train / validation / test splits"""

    def test_from_rows(self) -> None:
        """Test a 60/20/20 split with one forecast week"""
        plan = SplitPlan.from_rows(feature_rows(51))
        assert plan.train_weeks == tuple(range(9, 39))
        assert plan.val_weeks == tuple(range(39, 49))
        assert plan.test_weeks == tuple(range(49, 59))
        assert plan.forecast_weeks == (59,)
        assert plan.segment("forecast") == (59,)
        assert plan.to_dict()["validation"] == list(range(39, 49))

    def test_segments_must_be_contiguous(self) -> None:
        with pytest.raises(InputValidationError):
            SplitPlan((1, 2), (4,), (5,))

    def test_empty_training_segment(self) -> None:
        with pytest.raises(InputValidationError):
            SplitPlan((), (1,), (2,))

    def test_too_few_rows(self) -> None:
        with pytest.raises(InputValidationError):
            SplitPlan.from_rows(feature_rows(2))

    @pytest.mark.parametrize("train,val", [(0.0, 0.2), (0.8, 0.2), (1.0, 0.0)])
    def test_invalid_fractions(self, train: float, val: float) -> None:
        with pytest.raises(InputValidationError):
            SplitPlan.from_rows(feature_rows(51), train, val)

    def test_unknown_segment(self) -> None:
        with pytest.raises(InputValidationError):
            SplitPlan.from_rows(feature_rows(51)).segment("holdout")


def test_model_config_validation() -> None:
    with pytest.raises(InvalidConfigError):
        ModelConfig(hidden_size=0)
    with pytest.raises(InvalidConfigError):
        ModelConfig(learning_rate=0.0)
    with pytest.raises(InvalidConfigError):
        ModelConfig(refit_epochs=-1)


def test_normalizer_drops_constant_columns() -> None:
    """Test z-scoring with training statistics and zero-variance removal"""
    normalizer = Normalizer.fit(np.array([[1.0, 5.0], [3.0, 5.0]]))
    assert normalizer.kept == 1
    transformed = normalizer.transform(np.array([[1.0, 5.0]]))
    np.testing.assert_array_equal(transformed, [[-1.0]])
    windows = np.ones((2, 3, 2))
    assert normalizer.transform(windows).shape == (2, 3, 1)


def test_window_set() -> None:
    """Test that a window ends at its week and covers the preceding rows"""
    rows = feature_rows(6)
    data = WindowSet(rows, FEATURE_COLUMNS)
    assert not data.has_window(10, 3)
    assert data.has_window(11, 3)
    window = data.windows([12], 3)
    np.testing.assert_array_equal(window[0, -1], rows[3].values())
    np.testing.assert_array_equal(window[0, 0], rows[1].values())
    assert data.labelled([11, 12, 13, 14], 3) == [11, 12, 13]


def test_clip_gradients() -> None:
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_gradients(grads, 1.0) == 5.0
    np.testing.assert_allclose([grads["a"][0], grads["b"][0]], [0.6, 0.8])
    small = {"a": np.array([0.1])}
    clip_gradients(small, 1.0)
    assert small["a"][0] == 0.1


class TestOptimize:
    """Full-batch Adam"""

    def test_loss_decreases(self) -> None:
        """Test that training fits a learnable target better than the initial model"""
        rng = np.random.default_rng(3)
        x = rng.standard_normal((20, 3, 3))
        y = x[:, -1, 0]
        params = LSTMParams.initialize(3, 3, 1, rng)
        before = mse_loss(params, x, y)
        fitted, epochs, best = optimize(
            params, x, y, epochs=200, learning_rate=0.01, grad_clip=1.0
        )
        assert epochs == 200 and best is None
        assert mse_loss(fitted, x, y) < before

    def test_best_validation_parameters_are_returned(self) -> None:
        rng = np.random.default_rng(4)
        x = rng.standard_normal((12, 3, 2))
        y = x[:, -1, 1]
        params = LSTMParams.initialize(2, 2, 1, rng)
        validation = (x[8:], y[8:])
        best, _, best_val = optimize(
            params,
            x[:8],
            y[:8],
            epochs=50,
            learning_rate=0.01,
            grad_clip=1.0,
            validation=validation,
            patience=5,
        )
        assert best_val is not None
        assert mse_loss(best, *validation) == best_val

    def test_divergence_raises(self) -> None:
        """Test that a non-finite loss stops training with its epoch"""
        params = LSTMParams.initialize(2, 2, 1, np.random.default_rng(0))
        x = np.full((3, 2, 2), np.inf)
        with pytest.raises(TrainingError) as info:
            optimize(
                params, x, np.zeros(3), epochs=5, learning_rate=0.01, grad_clip=1.0
            )
        assert info.value.epoch == 1
        assert info.value.learning_rate == 0.01


class TestTrain:
    """Fitting on the training segment"""

    def test_same_seed_same_model(self) -> None:
        rows = feature_rows(51)
        plan = SplitPlan.from_rows(rows)
        first = train(rows, plan, tiny_model_config())
        second = train(rows, plan, tiny_model_config())
        for name, tensor in first.params.tensors().items():
            np.testing.assert_array_equal(tensor, second.params.tensors()[name])
        other = train(rows, plan, tiny_model_config(seed=1))
        assert not np.array_equal(other.params.weights[0], first.params.weights[0])

    def test_target_scaling_uses_training_rows(self) -> None:
        rows = feature_rows(51)
        plan = SplitPlan.from_rows(rows)
        model = train(rows, plan, tiny_model_config())
        targets = np.array([r.target for r in rows if r.week in plan.train_weeks[2:]])
        assert model.target_mean == pytest.approx(float(targets.mean()))
        assert model.target_scale == pytest.approx(float(targets.std()))
        assert model.epochs_run >= 1
        assert model.best_val_loss is not None

    def test_constant_feature_is_dropped(self) -> None:
        rows = [replace(r, price=100.0) for r in feature_rows(51)]
        model = train(rows, SplitPlan.from_rows(rows), tiny_model_config())
        assert "price" not in model.kept_features
        assert model.normalizer.kept == len(FEATURE_COLUMNS) - 1
        assert model.params.input_size == len(FEATURE_COLUMNS) - 1

    def test_feature_count_mismatch(self) -> None:
        rows = feature_rows(51)
        with pytest.raises(InputValidationError):
            train(rows, SplitPlan.from_rows(rows), tiny_model_config(input_size=5))

    def test_too_few_training_rows(self) -> None:
        rows = feature_rows(6)
        plan = SplitPlan((9, 10, 11), (12,), (13,))
        with pytest.raises(InputValidationError):
            train(rows, plan, tiny_model_config())


class TestPredict:
    """Single-window predictions"""

    def test_lstm_predict_matches_batch_prediction(self) -> None:
        rows = feature_rows(51)
        model = train(rows, SplitPlan.from_rows(rows), tiny_model_config())
        data = WindowSet(rows, FEATURE_COLUMNS)
        raw = data.windows([50], 3)
        expected = float(model.predict_raw(raw)[0])
        window = model.normalizer.transform(raw)[0]
        assert lstm_predict(model, window) == pytest.approx(expected, abs=1e-12)

    def test_window_shape_errors(self) -> None:
        rows = feature_rows(51)
        model = train(rows, SplitPlan.from_rows(rows), tiny_model_config())
        with pytest.raises(WindowShapeError):
            lstm_predict(model, np.zeros((2, model.normalizer.kept)))
        with pytest.raises(WindowShapeError):
            lstm_predict(model, np.zeros((3, model.normalizer.kept - 1)))
        with pytest.raises(WindowShapeError):
            model.predict_raw(np.zeros((1, 3, 4)))


def test_refit_keeps_normalization() -> None:
    """Test that refitting changes weights but not scaling"""
    rows = feature_rows(51)
    model = train(rows, SplitPlan.from_rows(rows), tiny_model_config())
    data = WindowSet(rows, FEATURE_COLUMNS)
    weeks = data.labelled(list(range(9, 50)), 3)
    updated = refit(model, data, weeks)
    assert updated.normalizer is model.normalizer
    assert updated.target_mean == model.target_mean
    assert updated.epochs_run == model.epochs_run + 3
    assert not np.array_equal(updated.params.head_w, model.params.head_w)
    assert refit(model, data, []) is model


class TestFit:
    """Behaviour of a model trained for the full epoch budget"""

    @staticmethod
    def settings() -> ModelConfig:
        return tiny_model_config(epochs=200, patience=20)

    def test_zero_target_gives_zero_output(self) -> None:
        rows = [replace(r, target=0.0) for r in feature_rows(51)]
        model = train(rows, SplitPlan.from_rows(rows), self.settings())
        data = WindowSet(rows, FEATURE_COLUMNS)
        weeks = [w for w in data.weeks if data.has_window(w, 3)]
        predicted = model.predict_raw(data.windows(weeks, 3))
        assert np.max(np.abs(predicted)) < 1e-3

    def test_planted_signal_is_learned(self) -> None:
        """Test that test-week error is well below the target variance"""
        rows = feature_rows(150, coupling=0.9)
        plan = SplitPlan.from_rows(rows)
        model = train(rows, plan, self.settings())
        data = WindowSet(rows, FEATURE_COLUMNS)
        weeks = data.labelled(plan.test_weeks, 3)
        y = data.target_array(weeks)
        predicted = model.predict_raw(data.windows(weeks, 3))
        assert np.mean((predicted - y) ** 2) < np.var(y) / 4

    def test_training_columns_are_standardized(self) -> None:
        rows = feature_rows(51)
        plan = SplitPlan.from_rows(rows)
        model = train(rows, plan, self.settings())
        data = WindowSet(rows, FEATURE_COLUMNS)
        features = data.features[[data.position[w] for w in plan.train_weeks]]
        normalized = model.normalizer.transform(features)
        np.testing.assert_allclose(normalized.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(normalized.std(axis=0), 1.0, atol=1e-9)
