"""Chronological split, normalization and Adam training of the LSTM regressor."""

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from ledgertopo.config import FEATURE_COLUMNS
from ledgertopo.forecaster.lstm import (
    LSTMParams,
    forward,
    loss_and_gradients,
    mse_loss,
)
from ledgertopo.market_features import FeatureRow
from ledgertopo.utils.config import PipelineConfig
from ledgertopo.utils.exceptions import (
    InputValidationError,
    InvalidConfigError,
    TrainingError,
    WindowShapeError,
)
from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and optimizer settings of one forecaster."""

    input_size: int = len(FEATURE_COLUMNS)
    hidden_size: int = 16
    layers: int = 2
    window: int = 8
    learning_rate: float = 0.01
    epochs: int = 200
    patience: int = 20
    seed: int = 0
    grad_clip: float = 1.0
    refit_epochs: int = 20

    def __post_init__(self) -> None:
        for name in (
            "input_size",
            "hidden_size",
            "layers",
            "window",
            "epochs",
            "patience",
        ):
            if getattr(self, name) < 1:
                raise InvalidConfigError(
                    f"{name} must be a positive integer, got {getattr(self, name)}",
                    details={"field": name},
                )
        if self.refit_epochs < 0:
            raise InvalidConfigError("refit_epochs must be >= 0")
        for name in ("learning_rate", "grad_clip"):
            if not getattr(self, name) > 0:
                raise InvalidConfigError(f"{name} must be positive")
        if self.seed < 0:
            raise InvalidConfigError("seed must be >= 0")

    @classmethod
    def from_pipeline(
        cls, config: PipelineConfig, input_size: int, seed: Optional[int] = None
    ) -> "ModelConfig":
        return cls(
            input_size=input_size,
            hidden_size=config.hidden_size,
            layers=config.layers,
            window=config.window,
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            patience=config.patience,
            seed=config.seed if seed is None else seed,
            grad_clip=config.grad_clip,
            refit_epochs=config.refit_epochs,
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SplitPlan:
    """Contiguous train / validation / test weeks plus unscored forecast weeks.

    Weeks are absolute week ordinals, so a plan built on the full feature
    matrix also applies to any truncated copy of it.
    """

    train_weeks: tuple[int, ...]
    val_weeks: tuple[int, ...]
    test_weeks: tuple[int, ...]
    forecast_weeks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        ordered = (
            self.train_weeks + self.val_weeks + self.test_weeks + self.forecast_weeks
        )
        if any(b != a + 1 for a, b in zip(ordered, ordered[1:])):
            raise InputValidationError(
                "Split segments must be contiguous and chronological",
                field="split",
                value=ordered,
            )
        if not self.train_weeks:
            raise InputValidationError(
                "The training segment is empty", field="train_weeks"
            )

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[FeatureRow],
        train_fraction: float = 0.6,
        val_fraction: float = 0.2,
    ) -> "SplitPlan":
        """Split the labelled prefix of ``rows`` by fraction.

        Rows after the first one without a target form the forecast segment.
        """
        if not (0 < train_fraction < 1 and 0 <= val_fraction < 1 - train_fraction):
            raise InputValidationError(
                f"Invalid split fractions {train_fraction}/{val_fraction}",
                field="train_fraction",
                value=(train_fraction, val_fraction),
                expected_type="train in (0,1), train + val < 1",
            )
        weeks = [r.week for r in rows]
        labelled = next(
            (i for i, r in enumerate(rows) if r.target is None), len(rows)
        )
        n = labelled
        n_train = int(round(train_fraction * n, 9))
        n_val = int(round(val_fraction * n, 9))
        if n_train < 1 or n - n_train - n_val < 1:
            raise InputValidationError(
                f"{n} labelled rows are too few for a "
                f"{train_fraction}/{val_fraction} split",
                field="rows",
                value=n,
            )
        return cls(
            train_weeks=tuple(weeks[:n_train]),
            val_weeks=tuple(weeks[n_train : n_train + n_val]),
            test_weeks=tuple(weeks[n_train + n_val : n]),
            forecast_weeks=tuple(weeks[n:]),
        )

    def segment(self, name: str) -> tuple[int, ...]:
        """Weeks of ``train``, ``validation``, ``test`` or ``forecast``."""
        segments = {
            "train": self.train_weeks,
            "validation": self.val_weeks,
            "test": self.test_weeks,
            "forecast": self.forecast_weeks,
        }
        if name not in segments:
            raise InputValidationError(
                f"Unknown segment {name!r}", field="segment", value=name
            )
        return segments[name]

    def to_dict(self) -> dict[str, list[int]]:
        return {
            "train": list(self.train_weeks),
            "validation": list(self.val_weeks),
            "test": list(self.test_weeks),
            "forecast": list(self.forecast_weeks),
        }


@dataclass(frozen=True)
class Normalizer:
    """Per-feature z-score from training statistics.

    Features with zero training variance are dropped; ``keep`` records which
    input columns survive.
    """

    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Normalizer":
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        return cls(mean=mean, std=std, keep=std > 0)

    @classmethod
    def identity(cls, width: int) -> "Normalizer":
        return cls(np.zeros(width), np.ones(width), np.ones(width, dtype=bool))

    @property
    def kept(self) -> int:
        return int(self.keep.sum())

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Normalize the last axis and drop constant columns."""
        scale = np.where(self.keep, self.std, 1.0)
        return ((features - self.mean) / scale)[..., self.keep]


class WindowSet:
    """Raw feature matrix of chronological rows, sliced into model windows."""

    def __init__(self, rows: Sequence[FeatureRow], feature_names: Sequence[str]):
        self.weeks = tuple(r.week for r in rows)
        self.position = {w: i for i, w in enumerate(self.weeks)}
        values = [r.values(feature_names) for r in rows]
        self.features = np.array(values, dtype=np.float64).reshape(
            len(rows), len(feature_names)
        )
        self.targets = {r.week: r.target for r in rows}

    def has_window(self, week: int, length: int) -> bool:
        return week in self.position and self.position[week] >= length - 1

    def windows(self, weeks: Sequence[int], length: int) -> np.ndarray:
        """Raw windows ending at ``weeks``, shape ``(len(weeks), length, F)``."""
        out = np.empty((len(weeks), length, self.features.shape[1]))
        for i, week in enumerate(weeks):
            end = self.position[week] + 1
            out[i] = self.features[end - length : end]
        return out

    def labelled(self, weeks: Sequence[int], length: int) -> list[int]:
        """Weeks among ``weeks`` with a full window and a known target."""
        return [
            w
            for w in weeks
            if self.has_window(w, length) and self.targets.get(w) is not None
        ]

    def target_array(self, weeks: Sequence[int]) -> np.ndarray:
        return np.array([self.targets[w] for w in weeks], dtype=np.float64)


@dataclass
class TrainedModel:
    """LSTM parameters together with everything needed to apply them."""

    params: LSTMParams
    normalizer: Normalizer
    config: ModelConfig
    feature_names: tuple[str, ...] = FEATURE_COLUMNS
    target_mean: float = 0.0
    target_scale: float = 1.0
    epochs_run: int = 0
    best_val_loss: Optional[float] = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def kept_features(self) -> tuple[str, ...]:
        return tuple(n for n, k in zip(self.feature_names, self.normalizer.keep) if k)

    def predict_normalized(self, windows: np.ndarray) -> np.ndarray:
        """Outputs in target units for normalized windows ``(N, L, kept)``."""
        if windows.ndim != 3 or windows.shape[1] != self.config.window:
            raise WindowShapeError(
                f"Expected windows of length {self.config.window}, "
                f"got shape {windows.shape}"
            )
        out, _ = forward(self.params, windows)
        return out * self.target_scale + self.target_mean

    def predict_raw(self, windows: np.ndarray) -> np.ndarray:
        """Outputs for raw (unnormalized) windows ``(N, L, F)``."""
        if windows.ndim != 3 or windows.shape[2] != len(self.feature_names):
            raise WindowShapeError(
                f"Expected {len(self.feature_names)} features, "
                f"got shape {windows.shape}"
            )
        return self.predict_normalized(self.normalizer.transform(windows))


def lstm_predict(model: TrainedModel, window: np.ndarray) -> float:
    """Predict ``y[t+1]`` from one normalized window of shape ``(L, kept)``.

    Raises:
        WindowShapeError: If the window length or feature count is wrong
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[0] != model.config.window:
        raise WindowShapeError(
            f"Expected a window of {model.config.window} rows, got shape {window.shape}"
        )
    if window.shape[1] != model.normalizer.kept:
        raise WindowShapeError(
            f"Expected {model.normalizer.kept} features per row, got {window.shape[1]}"
        )
    return float(model.predict_normalized(window[None, :, :])[0])


class Adam:
    """Adaptive-moment optimizer updating :class:`LSTMParams` in place."""

    def __init__(
        self,
        params: LSTMParams,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self.m = {k: np.zeros_like(v) for k, v in params.tensors().items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors().items()}

    def update(self, params: LSTMParams, grads: dict[str, np.ndarray]) -> None:
        self.steps += 1
        c1 = 1.0 - self.beta1**self.steps
        c2 = 1.0 - self.beta2**self.steps
        for name, tensor in params.tensors().items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            tensor -= self.learning_rate * (self.m[name] / c1) / (
                np.sqrt(self.v[name] / c2) + self.eps
            )


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return norm


def optimize(
    params: LSTMParams,
    x: np.ndarray,
    y: np.ndarray,
    *,
    epochs: int,
    learning_rate: float,
    grad_clip: float,
    validation: Optional[tuple[np.ndarray, np.ndarray]] = None,
    patience: Optional[int] = None,
) -> tuple[LSTMParams, int, Optional[float]]:
    """Full-batch Adam on mean squared error.

    With ``validation`` the parameters with the lowest validation loss are
    returned and training stops after ``patience`` epochs without
    improvement; otherwise the final parameters are returned.

    Raises:
        TrainingError: If the loss or the parameters become non-finite
    """
    optimizer = Adam(params, learning_rate)
    best = params.copy()
    best_val: Optional[float] = None
    stale = 0
    epoch = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, epochs + 1):
            loss, grads = loss_and_gradients(params, x, y)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"Training loss became {loss} at epoch {epoch}",
                    learning_rate=learning_rate,
                    epoch=epoch,
                )
            clip_gradients(grads, grad_clip)
            optimizer.update(params, grads)
            if not params.all_finite():
                raise TrainingError(
                    f"Parameters became non-finite at epoch {epoch}",
                    learning_rate=learning_rate,
                    epoch=epoch,
                )
            if validation is None:
                continue
            val_loss = mse_loss(params, *validation)
            if not np.isfinite(val_loss):
                raise TrainingError(
                    f"Validation loss became {val_loss} at epoch {epoch}",
                    learning_rate=learning_rate,
                    epoch=epoch,
                )
            if best_val is None or val_loss < best_val:
                best_val, best, stale = val_loss, params.copy(), 0
            else:
                stale += 1
                if patience is not None and stale >= patience:
                    logger.debug(
                        f"Early stop at epoch {epoch} (best val {best_val:.6g})"
                    )
                    break
    if validation is None:
        return params, epoch, None
    return best, epoch, best_val


def train(
    rows: Sequence[FeatureRow],
    plan: SplitPlan,
    config: ModelConfig,
    feature_names: Sequence[str] = FEATURE_COLUMNS,
    early_stopping: bool = True,
) -> TrainedModel:
    """Fit a forecaster on the training weeks of ``plan``.

    Normalization and target scaling use training rows only. With
    ``early_stopping`` the validation weeks select the returned parameters.

    Raises:
        InputValidationError: With fewer than ``L + 1`` training rows
        TrainingError: If optimization diverges
    """
    feature_names = tuple(feature_names)
    if config.input_size != len(feature_names):
        raise InputValidationError(
            f"Model expects {config.input_size} features, {len(feature_names)} named",
            field="feature_names",
            value=feature_names,
        )
    data = WindowSet(rows, feature_names)
    train_rows = [w for w in plan.train_weeks if w in data.position]
    if len(train_rows) < config.window + 1:
        raise InputValidationError(
            f"{len(train_rows)} training rows; at least {config.window + 1} needed",
            field="train_weeks",
            value=len(train_rows),
        )

    normalizer = Normalizer.fit(data.features[[data.position[w] for w in train_rows]])
    dropped = [n for n, k in zip(feature_names, normalizer.keep) if not k]
    if dropped:
        logger.warning(f"Dropping zero-variance feature(s): {', '.join(dropped)}")
    if normalizer.kept == 0:
        raise InputValidationError(
            "Every feature is constant over the training weeks", field="rows"
        )

    train_weeks = data.labelled(train_rows, config.window)
    if not train_weeks:
        raise InputValidationError(
            "No labelled training window fits", field="train_weeks", value=train_rows
        )
    y_train = data.target_array(train_weeks)
    target_mean = float(y_train.mean())
    target_scale = float(y_train.std()) or 1.0

    def prepared(weeks: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        x = normalizer.transform(data.windows(weeks, config.window))
        return x, (data.target_array(weeks) - target_mean) / target_scale

    validation = None
    if early_stopping:
        val_weeks = data.labelled(plan.val_weeks, config.window)
        if val_weeks:
            validation = prepared(val_weeks)
        else:
            logger.warning("No validation windows; training without early stopping")

    rng = np.random.default_rng(config.seed)
    params = LSTMParams.initialize(
        normalizer.kept, config.hidden_size, config.layers, rng
    )
    params, epochs_run, best_val = optimize(
        params,
        *prepared(train_weeks),
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        grad_clip=config.grad_clip,
        validation=validation,
        patience=config.patience,
    )
    logger.info(
        f"Trained seed {config.seed} on {len(train_weeks)} windows "
        f"for {epochs_run} epoch(s)"
    )
    return TrainedModel(
        params=params,
        normalizer=normalizer,
        config=config,
        feature_names=feature_names,
        target_mean=target_mean,
        target_scale=target_scale,
        epochs_run=epochs_run,
        best_val_loss=best_val,
    )


def refit(model: TrainedModel, data: WindowSet, weeks: Sequence[int]) -> TrainedModel:
    """Warm-start ``model`` for ``refit_epochs`` epochs on the given windows.

    Normalization and target scaling stay those of the initial fit.
    """
    if not weeks or model.config.refit_epochs == 0:
        return model
    x = model.normalizer.transform(data.windows(weeks, model.config.window))
    y = (data.target_array(weeks) - model.target_mean) / model.target_scale
    params, epochs_run, _ = optimize(
        model.params.copy(),
        x,
        y,
        epochs=model.config.refit_epochs,
        learning_rate=model.config.learning_rate,
        grad_clip=model.config.grad_clip,
    )
    return TrainedModel(
        params=params,
        normalizer=model.normalizer,
        config=model.config,
        feature_names=model.feature_names,
        target_mean=model.target_mean,
        target_scale=model.target_scale,
        epochs_run=model.epochs_run + epochs_run,
        best_val_loss=model.best_val_loss,
        meta=dict(model.meta),
    )
