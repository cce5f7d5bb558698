"""Walk-forward evaluation: every prediction sees strictly earlier weeks only."""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

from ledgertopo.config import FEATURE_COLUMNS
from ledgertopo.forecaster.training import (
    ModelConfig,
    SplitPlan,
    TrainedModel,
    WindowSet,
    refit,
    train,
)
from ledgertopo.market_features import FeatureRow
from ledgertopo.utils.exceptions import InputValidationError
from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)

SEGMENTS = ("test", "validation")


@dataclass(frozen=True)
class Prediction:
    week: int
    predicted: float
    actual: Optional[float] = None


def walk_forward_predict(
    rows: Sequence[FeatureRow],
    plan: SplitPlan,
    config: ModelConfig,
    stride: int = 1,
    *,
    segment: str = "test",
    feature_names: Sequence[str] = FEATURE_COLUMNS,
    initial: Optional[TrainedModel] = None,
) -> list[Prediction]:
    """Predict ``y[t+1]`` for every evaluable week of ``segment``.

    The ``test`` segment starts from a model fit on the training weeks with
    early stopping on validation and also predicts the unscored forecast
    weeks; the ``validation`` segment starts from a model fit on the training
    weeks alone. Every ``stride`` evaluation weeks the model is warm-started
    on all labelled windows ending before the current week. ``stride = 0``
    never refits, which gives the static baseline.

    Args:
        rows: Chronological feature rows; may be a truncated copy of the rows
            the plan was built from
        plan: Split in absolute week ordinals
        config: Model settings
        stride: Refit period in evaluation weeks; 0 disables refitting
        segment: ``test`` or ``validation``
        feature_names: Predictor columns fed to the model
        initial: Pre-trained starting model, trained here when omitted

    Returns:
        One prediction per evaluable week, in week order
    """
    if segment not in SEGMENTS:
        raise InputValidationError(
            f"Unknown evaluation segment {segment!r}",
            field="segment",
            value=segment,
            expected_type=" or ".join(SEGMENTS),
        )
    if stride < 0:
        raise InputValidationError(
            f"stride must be >= 0, got {stride}", field="stride", value=stride
        )

    if segment == "test":
        weeks = plan.test_weeks + plan.forecast_weeks
        model = initial or train(rows, plan, config, feature_names)
    else:
        weeks = plan.val_weeks
        model = initial or train(
            rows, plan, config, feature_names, early_stopping=False
        )

    data = WindowSet(rows, model.feature_names)
    predictions = []
    for i, week in enumerate(weeks):
        if week not in data.position:
            continue
        if not data.has_window(week, config.window):
            logger.warning(
                f"Week {week} lacks {config.window} weeks of history; skipped"
            )
            continue
        if stride and i and i % stride == 0:
            history = data.labelled([w for w in data.weeks if w < week], config.window)
            model = refit(model, data, history)
        window = data.windows([week], config.window)
        predicted = float(model.predict_raw(window)[0])
        predictions.append(Prediction(week, predicted, data.targets[week]))
    logger.info(f"Walk-forward over {segment}: {len(predictions)} prediction(s)")
    return predictions
