"""Market predictors and assembly of the weekly feature matrix.

Weekly series (prices, search frequencies, per-wallet volumes) are keyed by
week ordinal. ``y[t]`` denotes the price increment ``price[t] - price[t-1]``;
the target of row ``t`` is ``y[t+1]``.
"""

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, fields
from datetime import date, timedelta
from typing import Optional

import numpy as np
import pandas as pd

from ledgertopo.config import FEATURE_COLUMNS
from ledgertopo.ingest import TimeSeries, WeekCalendar, WeekWindow
from ledgertopo.quantiles import rank_count
from ledgertopo.utils.exceptions import (
    AlignmentError,
    InputValidationError,
    InsufficientHistoryError,
    MissingSeriesError,
)
from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)

# Feature-matrix column -> FeatureRow attribute
COLUMN_FIELDS = {
    c: ("trade_volume_top" if c == "trade_volume_1%" else c) for c in FEATURE_COLUMNS
}


@dataclass(frozen=True)
class FeatureRow:
    """The nine predictors of week ``t`` and the next-week price increment."""

    week: int
    price: float
    price_inc: float
    trade_volume: float
    trade_volume_top: float
    puell_mult: float
    puell_mult_inc: float
    sent_inc: float
    motif_2_inc: float
    delta_beta0: float
    target: Optional[float] = None

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name != "week" and value is not None and not math.isfinite(value):
                raise InputValidationError(
                    f"Feature {f.name} of week {self.week} is not finite",
                    field=f.name,
                    value=value,
                    expected_type="finite float",
                )

    def values(self, columns: Sequence[str] = FEATURE_COLUMNS) -> tuple[float, ...]:
        """Predictor values in column order."""
        return tuple(getattr(self, COLUMN_FIELDS[c]) for c in columns)


@dataclass(frozen=True)
class TraderRanking:
    """Wallets ranked by how well their volume led next-week price moves."""

    week: int
    scores: Mapping[str, float]
    selected: frozenset[str]


def price_increments(prices: Mapping[int, float]) -> dict[int, float]:
    """``y[t] = price[t] - price[t-1]`` wherever both weeks are priced."""
    return {t: prices[t] - prices[t - 1] for t in sorted(prices) if t - 1 in prices}


def price_features(prices: Mapping[int, float], t: int) -> tuple[float, float]:
    """``(price_t, price_t - price_{t-1})``.

    Raises:
        MissingSeriesError: If week ``t`` or ``t-1`` has no price
    """
    if t < 1:
        raise MissingSeriesError("Week 0 has no previous price")
    for week in (t - 1, t):
        if week not in prices:
            raise MissingSeriesError(f"No price for week {week}")
    return prices[t], prices[t] - prices[t - 1]


def trade_volume(window: WeekWindow) -> float:
    """Sum of all transaction amounts of the week."""
    return math.fsum(r.amount for r in window.records)


class WalletVolumes:
    """Per-wallet weekly volume matrix (sent plus received amounts).

    Rows follow sorted wallet ids, columns follow week ordinals; built once
    and sliced per ranking week.
    """

    def __init__(self, windows: Sequence[WeekWindow]):
        rows = []
        for window in windows:
            for r in window.records:
                rows.append((r.sender, window.index, r.amount))
                rows.append((r.receiver, window.index, r.amount))
        frame = pd.DataFrame(rows, columns=["wallet", "week", "amount"])
        weeks = len(windows)
        if frame.empty:
            self.wallets: tuple[str, ...] = ()
            self.matrix = np.zeros((0, weeks))
            return
        pivot = frame.pivot_table(
            index="wallet",
            columns="week",
            values="amount",
            aggfunc="sum",
            fill_value=0.0,
        )
        pivot = pivot.reindex(columns=range(weeks), fill_value=0.0).sort_index()
        self.wallets = tuple(str(w) for w in pivot.index)
        self.matrix = pivot.to_numpy(dtype=float)


def rank_top_traders(
    volumes: WalletVolumes,
    increments: Mapping[int, float],
    t: int,
    fraction: float = 0.01,
    min_history: int = 8,
    min_active_weeks: int = 3,
) -> TraderRanking:
    """Score wallets by Pearson correlation of ``volume(s)`` with ``y[s+1]``.

    Pairs run over ``s < t`` with ``y[s+1]`` known by the end of week ``t``,
    so volumes of week ``t`` and later never influence the ranking. Wallets
    active in fewer than ``min_active_weeks`` history weeks, or with constant
    history, are ineligible. The top ``ceil(fraction * eligible)`` wallets are
    selected, ties broken by wallet id.

    Raises:
        InsufficientHistoryError: With fewer than ``min_history`` pairs
    """
    history = [
        s
        for s in range(0, t)
        if s + 1 in increments and s < volumes.matrix.shape[1]
    ]
    if len(history) < min_history:
        raise InsufficientHistoryError(
            f"Week {t} has {len(history)} history week(s); {min_history} needed"
        )
    y = np.array([increments[s + 1] for s in history])
    if len(volumes.wallets) == 0 or np.ptp(y) == 0:
        return TraderRanking(t, {}, frozenset())

    x = volumes.matrix[:, history]
    active = (x > 0).sum(axis=1) >= min_active_weeks
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean()
    sx = np.sqrt((xc**2).sum(axis=1))
    eligible = active & (sx > 0)
    if not eligible.any():
        return TraderRanking(t, {}, frozenset())

    idx = np.flatnonzero(eligible)
    scores = (xc[idx] * yc).sum(axis=1) / (sx[idx] * np.sqrt((yc**2).sum()))
    scores = np.clip(scores, -1.0, 1.0)
    scored = {volumes.wallets[i]: float(s) for i, s in zip(idx, scores)}
    order = sorted(scored, key=lambda w: (-scored[w], w))
    selected = frozenset(order[: rank_count(fraction, len(order))])
    return TraderRanking(t, scored, selected)


def top_trader_volume(window: WeekWindow, ranking: TraderRanking) -> float:
    """Amount moved in week ``t`` by transfers touching a selected wallet."""
    chosen = ranking.selected
    return math.fsum(
        r.amount for r in window.records if r.sender in chosen or r.receiver in chosen
    )


def puell_multiple(
    issuance: Mapping[date, float], day: date, window: int = 365
) -> float:
    """Issuance on ``day`` over its trailing ``window``-day mean (inclusive).

    The mean is taken as offsets from the current value, so a constant
    series yields exactly 1.

    Raises:
        InsufficientHistoryError: If any of the ``window`` days is missing
    """
    days = [day - timedelta(days=i) for i in range(window - 1, -1, -1)]
    missing = [d for d in days if d not in issuance]
    if missing:
        raise InsufficientHistoryError(
            f"Puell multiple on {day} needs {window} daily points; "
            f"{len(missing)} missing (first {missing[0]})"
        )
    current = issuance[day]
    mean = current + math.fsum(issuance[d] - current for d in days) / window
    return current / mean


def sentiment_increment(
    trends: Mapping[str, Mapping[int, float]], t: int, terms: Sequence[str]
) -> float:
    """Week-over-week change of the summed term frequencies.

    Raises:
        MissingSeriesError: If a term lacks week ``t`` or ``t-1``
    """
    if t < 1:
        raise MissingSeriesError("Week 0 has no previous sentiment value")
    level = {}
    for week in (t - 1, t):
        try:
            level[week] = math.fsum(trends[term][week] for term in terms)
        except KeyError as e:
            raise MissingSeriesError(
                f"Search frequencies for {', '.join(terms)} do not cover week {week}"
            ) from e
    return level[t] - level[t - 1]


def market_components(
    windows: Sequence[WeekWindow],
    prices: Mapping[int, float],
    issuance: TimeSeries,
    trends: Mapping[str, Mapping[int, float]],
    calendar: WeekCalendar,
    *,
    terms: Sequence[str] = ("democrats", "republicans"),
    trader_fraction: float = 0.01,
    min_history: int = 8,
    min_active_weeks: int = 3,
    puell_window: int = 365,
) -> dict[str, dict[int, float]]:
    """Every defined non-topological feature value, keyed by column and week.

    Weeks where a feature is undefined (warmup, missing inputs) are simply
    absent; :func:`assemble_features` decides whether that is an error.
    Trader rankings run sequentially over ``t`` on one volume matrix.
    """
    weeks = [w.index for w in windows]
    out: dict[str, dict[int, float]] = {
        c: {} for c in FEATURE_COLUMNS if c not in ("motif_2_inc", "delta_beta0")
    }

    for t in weeks:
        if t in prices:
            out["price"][t] = prices[t]
        if t in prices and t - 1 in prices:
            out["price_inc"][t] = prices[t] - prices[t - 1]
        out["trade_volume"][t] = trade_volume(windows[t])

    volumes = WalletVolumes(windows)
    increments = price_increments(prices)
    for t in weeks:
        try:
            ranking = rank_top_traders(
                volumes, increments, t, trader_fraction, min_history, min_active_weeks
            )
        except InsufficientHistoryError:
            continue
        out["trade_volume_1%"][t] = top_trader_volume(windows[t], ranking)
        logger.debug(f"Week {t}: {len(ranking.selected)} top trader(s) selected")

    daily = dict(issuance.points)
    puell: dict[int, float] = {}
    for t in weeks:
        try:
            puell[t] = puell_multiple(daily, calendar.week_end_date(t), puell_window)
        except InsufficientHistoryError:
            continue
    out["puell_mult"] = puell
    out["puell_mult_inc"] = {
        t: puell[t] - puell[t - 1] for t in puell if t - 1 in puell
    }

    for t in weeks:
        try:
            out["sent_inc"][t] = sentiment_increment(trends, t, terms)
        except MissingSeriesError:
            continue
    return out


def assemble_features(
    components: Mapping[str, Mapping[int, float]],
    prices: Mapping[int, float],
    weeks: Sequence[int],
) -> list[FeatureRow]:
    """One row per week from the first fully defined week to the last week.

    Args:
        components: Column -> week -> value for all nine feature columns
        prices: Week -> end-of-week price, for the targets
        weeks: Every week ordinal of the data set, ascending

    Returns:
        Chronological rows; the target is ``None`` where week ``t+1`` is unpriced

    Raises:
        AlignmentError: If a feature is undefined for a week after the first
            complete one, listing every missing (week, feature) pair
    """
    absent = [c for c in FEATURE_COLUMNS if c not in components]
    if absent:
        raise AlignmentError([(w, c) for w in weeks for c in absent])

    def undefined(t: int) -> list[str]:
        return [c for c in FEATURE_COLUMNS if t not in components[c]]

    start = next((t for t in weeks if not undefined(t)), None)
    if start is None:
        raise AlignmentError(
            [(t, c) for t in weeks for c in undefined(t)],
            suggestions=["No week has every feature; check the input series coverage"],
        )

    tail = [t for t in weeks if t >= start]
    missing = [(t, c) for t in tail for c in undefined(t)]
    if missing:
        raise AlignmentError(missing)

    rows = []
    for t in tail:
        values = {COLUMN_FIELDS[c]: float(components[c][t]) for c in FEATURE_COLUMNS}
        target = prices[t + 1] - prices[t] if t + 1 in prices and t in prices else None
        rows.append(FeatureRow(week=t, target=target, **values))
    logger.info(
        f"Assembled {len(rows)} feature rows (weeks {tail[0]}-{tail[-1]}), "
        f"{start - weeks[0]} warmup week(s) dropped"
    )
    return rows
