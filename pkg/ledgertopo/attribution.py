"""Exact Shapley attributions of forecaster outputs and SHAP-rank tables.

The coalition value ``v(S)`` is the mean model output over a background set
of windows in which the features of ``S`` are taken from the instance on all
window rows. Features the model cannot see (dropped for zero variance, or
with all-zero first-layer input weights) are null players: they get an
attribution of exactly 0 and are left out of the enumeration.
"""

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from ledgertopo.forecaster.training import SplitPlan, TrainedModel, WindowSet
from ledgertopo.market_features import FeatureRow
from ledgertopo.quantiles import top_threshold
from ledgertopo.utils.exceptions import (
    AttributionError,
    InputValidationError,
    WindowShapeError,
)
from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)

RANK_STATISTICS = ("magnitude", "signed")

# Coalitions evaluated per forward batch
COALITION_CHUNK = 64


@dataclass(frozen=True)
class ShapleyReport:
    week: int
    phi: Mapping[str, float]
    base: float
    prediction: float
    seed: int

    @property
    def residual(self) -> float:
        """``sum(phi) + base - prediction``; zero up to rounding."""
        return math.fsum(self.phi.values()) + self.base - self.prediction


@dataclass(frozen=True)
class RankTable:
    """Mean SHAP rank per feature over one week set."""

    ranks: Mapping[str, float]
    retrains: int
    weeks: tuple[int, ...]
    statistic: str = "magnitude"

    def ordered(self) -> list[tuple[str, float]]:
        return sorted(self.ranks.items(), key=lambda item: (item[1], item[0]))


def _active_players(model: TrainedModel) -> np.ndarray:
    """Kept-input indices whose first-layer weight rows are not all zero."""
    w = model.params.weights[0][: model.normalizer.kept]
    return np.flatnonzero(np.any(w != 0.0, axis=1))


def _coalition_weights(players: int) -> np.ndarray:
    """``|S|! (M - |S| - 1)! / M!`` indexed by coalition size."""
    return np.array(
        [
            math.factorial(s)
            * math.factorial(players - s - 1)
            / math.factorial(players)
            for s in range(players)
        ]
    )


def shapley_exact(
    model: TrainedModel,
    instance: np.ndarray,
    background: np.ndarray,
    week: int = -1,
) -> ShapleyReport:
    """Exact Shapley values of one prediction by full coalition enumeration.

    Args:
        model: Trained forecaster
        instance: Raw feature window of shape ``(L, F)``
        background: Raw feature windows of shape ``(N, L, F)``
        week: Week the instance window ends at, for the report

    Returns:
        Attributions in target units for every model feature

    Raises:
        AttributionError: If the background set is empty
        WindowShapeError: If window shapes do not match the model
    """
    instance = np.asarray(instance, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if background.ndim != 3 or background.shape[0] == 0:
        raise AttributionError(
            "Shapley values need a non-empty background set",
            suggestions=["Pass training windows as the background"],
        )
    expected = (model.config.window, len(model.feature_names))
    if instance.shape != expected or background.shape[1:] != expected:
        raise WindowShapeError(
            f"Expected windows of shape {expected}, got instance {instance.shape} "
            f"and background {background.shape[1:]}"
        )

    x = model.normalizer.transform(instance)
    bg = model.normalizer.transform(background)
    players = _active_players(model)
    m = len(players)
    n_masks = 1 << m

    values = np.empty(n_masks)
    for start in range(0, n_masks, COALITION_CHUNK):
        masks = range(start, min(start + COALITION_CHUNK, n_masks))
        batch = np.repeat(bg[None, :, :, :], len(masks), axis=0)
        for j, mask in enumerate(masks):
            chosen = [players[i] for i in range(m) if mask >> i & 1]
            batch[j][:, :, chosen] = x[:, chosen]
        out = model.predict_normalized(batch.reshape(-1, *bg.shape[1:]))
        values[start : start + len(masks)] = out.reshape(len(masks), -1).mean(axis=1)

    phi_active = np.zeros(m)
    if m:
        sizes = np.array([bin(mask).count("1") for mask in range(n_masks)])
        weights = _coalition_weights(m)
        for i in range(m):
            bit = 1 << i
            without = np.array([mask for mask in range(n_masks) if not mask & bit])
            phi_active[i] = math.fsum(
                weights[sizes[without]] * (values[without | bit] - values[without])
            )

    kept = [i for i, k in enumerate(model.normalizer.keep) if k]
    phi = {name: 0.0 for name in model.feature_names}
    for i, player in enumerate(players):
        phi[model.feature_names[kept[player]]] = float(phi_active[i])
    return ShapleyReport(
        week=week,
        phi=phi,
        base=float(values[0]),
        prediction=float(values[-1]),
        seed=model.seed,
    )


def training_background(
    model: TrainedModel, rows: Sequence[FeatureRow], plan: SplitPlan
) -> np.ndarray:
    """Raw windows ending at every training week with a full window."""
    data = WindowSet(rows, model.feature_names)
    weeks = [w for w in plan.train_weeks if data.has_window(w, model.config.window)]
    return data.windows(weeks, model.config.window)


def explain_weeks(
    model: TrainedModel,
    rows: Sequence[FeatureRow],
    weeks: Iterable[int],
    background: np.ndarray,
) -> dict[int, ShapleyReport]:
    """One report per week in ``weeks`` that has a full window in ``rows``."""
    data = WindowSet(rows, model.feature_names)
    reports = {}
    for week in weeks:
        if not data.has_window(week, model.config.window):
            logger.warning(f"Week {week} lacks a full window; not attributed")
            continue
        window = data.windows([week], model.config.window)[0]
        reports[week] = shapley_exact(model, window, background, week)
    return reports


def rank_features(
    reports: Mapping[int, Mapping[int, ShapleyReport]],
    weeks: Iterable[int],
    statistic: str = "magnitude",
) -> RankTable:
    """Average SHAP ranks over retrains for one set of weeks.

    Per retrain, features are ranked by the mean of ``|phi|`` (``magnitude``)
    or of ``phi`` (``signed``) over ``weeks``; rank 1 is the largest and ties
    share the average rank. The table holds the mean rank across retrains.

    Args:
        reports: Retrain seed -> week -> report
        weeks: Week set to aggregate over
        statistic: ``magnitude`` or ``signed``

    Raises:
        AttributionError: If a (retrain, week) report is missing or the
            inputs are empty
    """
    if statistic not in RANK_STATISTICS:
        raise InputValidationError(
            f"Unknown rank statistic {statistic!r}",
            field="rank_statistic",
            value=statistic,
            expected_type=" or ".join(RANK_STATISTICS),
        )
    weeks = tuple(sorted(set(weeks)))
    if not reports or not weeks:
        raise AttributionError("Rank aggregation needs at least one retrain and week")
    missing = [
        (seed, w)
        for seed, by_week in reports.items()
        for w in weeks
        if w not in by_week
    ]
    if missing:
        raise AttributionError(
            f"Missing attribution reports for {len(missing)} (retrain, week) pair(s)",
            details={"missing": missing[:10]},
        )

    features: Optional[list[str]] = None
    per_retrain = []
    for seed in sorted(reports):
        chosen = [reports[seed][w] for w in weeks]
        if features is None:
            features = list(chosen[0].phi)
        phi = np.array([[r.phi[f] for f in features] for r in chosen])
        if statistic == "magnitude":
            phi = np.abs(phi)
        score = phi.mean(axis=0)
        per_retrain.append(rankdata(-score, method="average"))
    assert features is not None
    mean_ranks = np.mean(per_retrain, axis=0)
    return RankTable(
        ranks={f: float(r) for f, r in zip(features, mean_ranks)},
        retrains=len(per_retrain),
        weeks=weeks,
        statistic=statistic,
    )


def detect_anomalous_weeks(
    actual: Mapping[int, float], q: float = 0.2
) -> tuple[int, ...]:
    """Weeks whose ``|y|`` is among the top ``ceil(q * n)`` of the test set.

    Ties at the threshold are all selected. A constant series has no
    anomalies and yields an empty set; equal magnitudes of differing sign
    select every week. Both cases log a warning.
    """
    if not 0 < q <= 1:
        raise InputValidationError(
            f"Anomaly quantile must be in (0, 1], got {q}",
            field="anomaly_quantile",
            value=q,
            expected_type="float in (0, 1]",
        )
    if not actual:
        return ()
    values = list(actual.values())
    if min(values) == max(values):
        logger.warning("Actual increments are constant; no anomalous weeks")
        return ()
    magnitude = {w: abs(y) for w, y in actual.items()}
    threshold = top_threshold(list(magnitude.values()), q)
    selected = tuple(sorted(w for w, m in magnitude.items() if m >= threshold))
    if len(set(magnitude.values())) == 1:
        logger.warning("All |increments| are equal; every week selected as anomalous")
    return selected
