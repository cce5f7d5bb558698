"""Correlation tables, RMSE and the feature-set ablation study."""

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from ledgertopo.attribution import detect_anomalous_weeks
from ledgertopo.config import FEATURE_COLUMNS, FEATURE_SETS
from ledgertopo.forecaster.training import ModelConfig, SplitPlan
from ledgertopo.forecaster.walk_forward import walk_forward_predict
from ledgertopo.market_features import FeatureRow
from ledgertopo.utils.exceptions import (
    EmptySelectionError,
    InputValidationError,
    LedgerTopoError,
    UndefinedStatisticError,
)
from ledgertopo.utils.logging import get_logger
from ledgertopo.utils.parallel import run_jobs

logger = get_logger(__name__)

BASIC_SET = "basic"


def _paired(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputValidationError(
            f"Series lengths differ: {a.shape} vs {b.shape}", field="y"
        )
    if a.size < 3:
        raise InputValidationError(
            f"Correlation needs at least 3 pairs, got {a.size}",
            field="x",
            value=a.size,
            expected_type="length >= 3",
        )
    return a, b


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient.

    Raises:
        UndefinedStatisticError: If either series has zero variance
    """
    a, b = _paired(x, y)
    ac = a - a.mean()
    bc = b - b.mean()
    sa = math.fsum(ac * ac)
    sb = math.fsum(bc * bc)
    if sa == 0 or sb == 0:
        raise UndefinedStatisticError(
            "Correlation is undefined for a constant series",
            details={"var_x": sa, "var_y": sb},
        )
    r = math.fsum(ac * bc) / math.sqrt(sa * sb)
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks."""
    a, b = _paired(x, y)
    return pearson(
        stats.rankdata(a, method="average"), stats.rankdata(b, method="average")
    )


def significance(coefficient: float, n: int, alpha: float = 0.05) -> bool:
    """Two-sided t-test of a correlation coefficient against zero.

    ``t = r * sqrt((n - 2) / (1 - r^2))`` with ``n - 2`` degrees of freedom.
    """
    if n < 4:
        raise InputValidationError(
            f"Significance needs n >= 4, got {n}", field="n", value=n
        )
    if abs(coefficient) >= 1.0:
        return True
    t = coefficient * math.sqrt((n - 2) / (1.0 - coefficient**2))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return p < alpha


def rmse(
    predicted: Mapping[int, float],
    actual: Mapping[int, float],
    weeks: Optional[Iterable[int]] = None,
) -> float:
    """Root mean squared error over ``weeks`` (default: all common weeks).

    Raises:
        EmptySelectionError: If no week is selected
        InputValidationError: If a selected week lacks either value
    """
    if weeks is None:
        chosen = sorted(predicted.keys() & actual.keys())
    else:
        chosen = sorted(set(weeks))
    if not chosen:
        raise EmptySelectionError("RMSE over an empty week selection")
    missing = [w for w in chosen if w not in predicted or w not in actual]
    if missing:
        raise InputValidationError(
            f"Week(s) {missing[:5]} lack a prediction or an actual value",
            field="weeks",
            value=missing,
        )
    squared = math.fsum((predicted[w] - actual[w]) ** 2 for w in chosen)
    return math.sqrt(squared / len(chosen))


@dataclass(frozen=True)
class CorrelationEntry:
    """Coefficients of one feature against the target; ``None`` if undefined."""

    feature: str
    n: int
    pearson: Optional[float]
    spearman: Optional[float]
    pearson_significant: bool
    spearman_significant: bool


@dataclass(frozen=True)
class CorrelationReport:
    entries: tuple[CorrelationEntry, ...]
    alpha: float = 0.05

    def __getitem__(self, feature: str) -> CorrelationEntry:
        for entry in self.entries:
            if entry.feature == feature:
                return entry
        raise KeyError(feature)

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(e.feature for e in self.entries)


def correlation_report(
    columns: Mapping[str, Mapping[int, float]],
    target: Mapping[int, Optional[float]],
    alpha: float = 0.05,
) -> CorrelationReport:
    """Pearson and Spearman coefficients of every column against the target.

    Each column is paired with the target on the weeks both define.
    """
    entries = []
    for name, values in columns.items():
        weeks = sorted(w for w in values if target.get(w) is not None)
        x = [values[w] for w in weeks]
        y = [target[w] for w in weeks]
        r: Optional[float] = None
        rho: Optional[float] = None
        try:
            r = pearson(x, y)
            rho = spearman(x, y)
        except (UndefinedStatisticError, InputValidationError) as e:
            logger.warning(f"No correlation for {name}: {e.message}")
        n = len(weeks)
        entries.append(
            CorrelationEntry(
                feature=name,
                n=n,
                pearson=r,
                spearman=rho,
                pearson_significant=r is not None
                and n >= 4
                and significance(r, n, alpha),
                spearman_significant=rho is not None
                and n >= 4
                and significance(rho, n, alpha),
            )
        )
    return CorrelationReport(tuple(entries), alpha)


def target_of(rows: Sequence[FeatureRow]) -> dict[int, Optional[float]]:
    return {r.week: r.target for r in rows}


def feature_correlations(
    rows: Sequence[FeatureRow], alpha: float = 0.05
) -> CorrelationReport:
    """Every model feature against the target."""
    columns = {
        name: {r.week: r.values((name,))[0] for r in rows} for name in FEATURE_COLUMNS
    }
    return correlation_report(columns, target_of(rows), alpha)


@dataclass(frozen=True)
class AblationEntry:
    """Scores of one feature set, averaged over successful retrains."""

    feature_set: str
    rmse_all: float
    rmse_anomalous: Optional[float]
    gain_all: float
    gain_anomalous: Optional[float]
    seed_gains: tuple[float, ...] = ()

    @property
    def gain_stderr(self) -> float:
        """Standard error of the per-seed gains on all test weeks."""
        if len(self.seed_gains) < 2:
            return 0.0
        return float(np.std(self.seed_gains, ddof=1) / math.sqrt(len(self.seed_gains)))

    @property
    def positive_fraction(self) -> float:
        if not self.seed_gains:
            return 0.0
        return sum(g > 0 for g in self.seed_gains) / len(self.seed_gains)


@dataclass(frozen=True)
class AblationReport:
    entries: tuple[AblationEntry, ...]
    retrains: int
    failed: tuple[int, ...] = ()
    anomalous_weeks: tuple[int, ...] = ()
    seeds: tuple[int, ...] = field(default_factory=tuple)

    def __getitem__(self, feature_set: str) -> AblationEntry:
        for entry in self.entries:
            if entry.feature_set == feature_set:
                return entry
        raise KeyError(feature_set)


def derive_seeds(master: int, count: int) -> list[int]:
    """``count`` independent 32-bit seeds spawned from ``master``."""
    children = np.random.SeedSequence(master).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


@dataclass(frozen=True)
class AblationJob:
    rows: tuple[FeatureRow, ...]
    plan: SplitPlan
    feature_sets: tuple[tuple[str, tuple[str, ...]], ...]
    config: ModelConfig
    stride: int
    seed: int


def run_ablation_job(
    job: AblationJob,
) -> tuple[int, Optional[dict[str, dict[int, float]]], str]:
    """Test-week predictions of every feature set for one seed.

    Returns ``(seed, predictions or None, failure message)``.
    """
    predictions: dict[str, dict[int, float]] = {}
    try:
        for name, features in job.feature_sets:
            config = ModelConfig(
                **{
                    **job.config.to_dict(),
                    "input_size": len(features),
                    "seed": job.seed,
                }
            )
            result = walk_forward_predict(
                job.rows, job.plan, config, job.stride, feature_names=features
            )
            predictions[name] = {p.week: p.predicted for p in result}
    except LedgerTopoError as e:
        return job.seed, None, e.message
    return job.seed, predictions, ""


def _gain(base: float, value: float) -> float:
    return (base - value) / base if base > 0 else 0.0


def ablation(
    rows: Sequence[FeatureRow],
    plan: SplitPlan,
    config: ModelConfig,
    feature_sets: Optional[Mapping[str, Sequence[str]]] = None,
    retrains: int = 20,
    *,
    master_seed: int = 0,
    stride: int = 1,
    anomaly_quantile: float = 0.2,
    max_workers: int = 1,
) -> AblationReport:
    """Walk-forward RMSE of each feature set over ``retrains`` seeds.

    Gains are ``(RMSE_basic - RMSE_set) / RMSE_basic``, from the RMSEs
    averaged over retrains; per-seed paired gains feed the standard error
    and positive-gain fraction. A seed whose training fails for any set is
    excluded and listed in ``failed``.

    Raises:
        InputValidationError: If the sets do not include ``basic``
        EmptySelectionError: If every retrain failed
    """
    feature_sets = dict(feature_sets or FEATURE_SETS)
    if BASIC_SET not in feature_sets:
        raise InputValidationError(
            "Ablation feature sets must include 'basic'",
            field="feature_sets",
            value=sorted(feature_sets),
        )
    if retrains < 1:
        raise InputValidationError(
            "retrains must be >= 1", field="retrains", value=retrains
        )

    actual = {
        r.week: r.target
        for r in rows
        if r.week in plan.test_weeks and r.target is not None
    }
    anomalous = detect_anomalous_weeks(actual, anomaly_quantile)
    seeds = derive_seeds(master_seed, retrains)
    jobs = [
        AblationJob(
            rows=tuple(rows),
            plan=plan,
            feature_sets=tuple((k, tuple(v)) for k, v in feature_sets.items()),
            config=config,
            stride=stride,
            seed=seed,
        )
        for seed in seeds
    ]
    results = run_jobs(run_ablation_job, jobs, max_workers)

    failed = tuple(seed for seed, preds, _ in results if preds is None)
    for seed, preds, message in results:
        if preds is None:
            logger.warning(
                f"Retrain with seed {seed} failed and is excluded: {message}"
            )
    good = [preds for _, preds, _ in results if preds is not None]
    if not good:
        raise EmptySelectionError("Every ablation retrain failed")

    scored = {
        name: [rmse(p[name], actual, [w for w in actual if w in p[name]]) for p in good]
        for name in feature_sets
    }
    scored_anom = {
        name: [
            rmse(p[name], actual, [w for w in anomalous if w in p[name]]) for p in good
        ]
        if anomalous
        else []
        for name in feature_sets
    }
    base_all = float(np.mean(scored[BASIC_SET]))
    base_anom = float(np.mean(scored_anom[BASIC_SET])) if anomalous else None

    entries = []
    for name in feature_sets:
        mean_all = float(np.mean(scored[name]))
        mean_anom = float(np.mean(scored_anom[name])) if anomalous else None
        entries.append(
            AblationEntry(
                feature_set=name,
                rmse_all=mean_all,
                rmse_anomalous=mean_anom,
                gain_all=_gain(base_all, mean_all),
                gain_anomalous=(
                    _gain(base_anom, mean_anom)
                    if base_anom is not None and mean_anom is not None
                    else None
                ),
                seed_gains=tuple(
                    _gain(b, s) for b, s in zip(scored[BASIC_SET], scored[name])
                ),
            )
        )
    logger.info(
        f"Ablation over {len(good)} retrain(s), {len(failed)} failed, "
        f"{len(anomalous)} anomalous week(s)"
    )
    return AblationReport(
        entries=tuple(entries),
        retrains=len(good),
        failed=failed,
        anomalous_weeks=anomalous,
        seeds=tuple(s for s in seeds if s not in failed),
    )
