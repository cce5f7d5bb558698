"""Tests for market predictors and feature-matrix assembly"""

import math
from datetime import date, timedelta

import numpy as np
import pytest

from ledgertopo.config import FEATURE_COLUMNS
from ledgertopo.ingest import TransactionRecord, WeekWindow
from ledgertopo.market_features import (
    COLUMN_FIELDS,
    FeatureRow,
    WalletVolumes,
    assemble_features,
    price_features,
    price_increments,
    puell_multiple,
    rank_top_traders,
    sentiment_increment,
    top_trader_volume,
    trade_volume,
)
from ledgertopo.utils.exceptions import (
    AlignmentError,
    InputValidationError,
    InsufficientHistoryError,
    MissingSeriesError,
)
from tests.helpers.factories import record, window

# y[1..11]
INCREMENTS = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 1.0, 0.0, 2.0, -1.0, 5.0]


def prices() -> dict[int, float]:
    levels = {0: 100.0}
    for t, inc in enumerate(INCREMENTS, start=1):
        levels[t] = levels[t - 1] + inc
    return levels


def trader_windows(extra: tuple[TransactionRecord, ...] = ()) -> list[WeekWindow]:
    """12 weeks where ``lead`` moves with the next price step and ``anti`` against it.

    Every counterparty wallet appears in one week only.
    """
    weeks: list[list[TransactionRecord]] = [[] for _ in range(12)]
    for s in range(11):
        day = 7 * s + 1
        y_next = INCREMENTS[s]
        weeks[s] += [
            record(day, "lead", f"r-lead-{s}", 10.0 + y_next),
            record(day, "anti", f"r-anti-{s}", 10.0 - y_next),
            record(day, "flat", f"r-flat-{s}", 5.0),
        ]
    weeks[0].append(record(1, "rare", "r-rare-0", 50.0))
    weeks[1].append(record(8, "rare", "r-rare-1", 1.0))
    weeks[11].append(record(78, "lead", "r-lead-11", 4.0))
    weeks[11].append(record(78, "x", "y", 6.0))
    for r in extra:
        weeks[int((r.timestamp - window([]).start).days // 7)].append(r)
    return [window(records, index) for index, records in enumerate(weeks)]


class TestTopTraders:
    """Ranking wallets by lead correlation"""

    def test_leading_wallet_is_selected(self) -> None:
        """Test that the wallet tracking next-week moves ranks first"""
        ranking = rank_top_traders(
            WalletVolumes(trader_windows()), price_increments(prices()), 11, 0.5
        )
        assert set(ranking.scores) == {"lead", "anti"}
        assert math.isclose(ranking.scores["lead"], 1.0, rel_tol=1e-12)
        assert math.isclose(ranking.scores["anti"], -1.0, rel_tol=1e-12)
        assert ranking.selected == frozenset({"lead"})
        assert all(-1.0 <= s <= 1.0 for s in ranking.scores.values())

    def test_ranking_ignores_current_week_volume(self) -> None:
        """Test that volume in week t does not change the ranking"""
        late = (
            record(77, "anti", "r-late", 500.0),
            record(80, "anti", "r-late2", 900.0),
        )
        base = rank_top_traders(
            WalletVolumes(trader_windows()), price_increments(prices()), 11, 0.5
        )
        shifted = rank_top_traders(
            WalletVolumes(trader_windows(late)), price_increments(prices()), 11, 0.5
        )
        assert shifted.scores == base.scores
        assert shifted.selected == base.selected

    def test_latest_pair_counts(self) -> None:
        """Test that volume of week t-1 against the move of week t enters the score"""
        increments = price_increments(prices())
        increments[11] = -100.0
        ranking = rank_top_traders(WalletVolumes(trader_windows()), increments, 11)
        assert ranking.scores["lead"] < 0.5

    def test_insufficient_history(self) -> None:
        with pytest.raises(InsufficientHistoryError):
            rank_top_traders(
                WalletVolumes(trader_windows()), price_increments(prices()), 5
            )

    def test_min_history_boundary(self) -> None:
        """Test that week 8 has exactly the 8 pairs s = 0..7"""
        volumes = WalletVolumes(trader_windows())
        increments = price_increments(prices())
        ranking = rank_top_traders(volumes, increments, 8, min_history=8)
        assert math.isclose(ranking.scores["lead"], 1.0, rel_tol=1e-12)
        with pytest.raises(InsufficientHistoryError):
            rank_top_traders(volumes, increments, 7, min_history=8)

    def test_constant_price_selects_nobody(self) -> None:
        flat = {t: 0.0 for t in range(1, 12)}
        ranking = rank_top_traders(WalletVolumes(trader_windows()), flat, 11)
        assert ranking.selected == frozenset()

    def test_top_trader_volume(self) -> None:
        """Test that only transfers touching a selected wallet count"""
        windows = trader_windows()
        ranking = rank_top_traders(
            WalletVolumes(windows), price_increments(prices()), 11, 0.5
        )
        assert top_trader_volume(windows[11], ranking) == 4.0
        assert trade_volume(windows[11]) == 10.0


def test_wallet_volumes() -> None:
    """Test that both sides of a transfer are credited with its amount"""
    windows = [
        window([record(0, "A", "B", 2.0)], 0),
        window([record(8, "A", "C", 3.0)], 1),
    ]
    volumes = WalletVolumes(windows)
    assert volumes.wallets == ("A", "B", "C")
    np.testing.assert_array_equal(volumes.matrix, [[2.0, 3.0], [2.0, 0.0], [0.0, 3.0]])
    assert WalletVolumes([window([], 0)]).matrix.shape == (0, 1)


class TestPuellMultiple:
    """Issuance over its trailing mean"""

    def test_constant_issuance(self) -> None:
        day = date(2021, 6, 1)
        issuance = {day - timedelta(days=i): 900.0 for i in range(365)}
        assert puell_multiple(issuance, day) == 1.0

    def test_halving(self) -> None:
        """Test a halving on the last day of the window"""
        day = date(2021, 6, 1)
        issuance = {day - timedelta(days=i): 2.0 for i in range(1, 365)}
        issuance[day] = 1.0
        assert math.isclose(puell_multiple(issuance, day), 365 / 729, rel_tol=1e-12)

    def test_short_history(self) -> None:
        day = date(2021, 6, 1)
        issuance = {day - timedelta(days=i): 1.0 for i in range(100)}
        with pytest.raises(InsufficientHistoryError):
            puell_multiple(issuance, day)
        assert puell_multiple(issuance, day, window=100) == 1.0


def test_sentiment_increment() -> None:
    """Test the change of summed term frequencies"""
    trends = {"democrats": {0: 1.0, 1: 3.0}, "republicans": {0: 2.0, 1: 2.0}}
    assert sentiment_increment(trends, 1, ("democrats", "republicans")) == 2.0
    with pytest.raises(MissingSeriesError):
        sentiment_increment(trends, 2, ("democrats", "republicans"))
    with pytest.raises(MissingSeriesError):
        sentiment_increment(trends, 0, ("democrats",))


def test_price_features() -> None:
    assert price_features({0: 1.0, 1: 3.0}, 1) == (3.0, 2.0)
    with pytest.raises(MissingSeriesError):
        price_features({1: 3.0}, 1)


def complete_components(weeks: range) -> dict[str, dict[int, float]]:
    return {c: {t: float(t + i) for t in weeks} for i, c in enumerate(FEATURE_COLUMNS)}


class TestAssembly:
    """Aligning components into rows"""

    def test_rows_start_at_first_complete_week(self) -> None:
        """Test warmup trimming and the next-week target"""
        components = complete_components(range(2, 5))
        components["puell_mult"][1] = 0.5
        levels = {0: 10.0, 1: 11.0, 2: 13.0, 3: 12.0, 4: 15.0}
        rows = assemble_features(components, levels, list(range(5)))
        assert [r.week for r in rows] == [2, 3, 4]
        assert [r.target for r in rows] == [-1.0, 3.0, None]
        assert rows[0].values()[FEATURE_COLUMNS.index("trade_volume_1%")] == 5.0

    def test_gap_after_start(self) -> None:
        """Test that a missing value after the first complete week is reported"""
        components = complete_components(range(5))
        del components["sent_inc"][3]
        with pytest.raises(AlignmentError) as info:
            assemble_features(components, {}, list(range(5)))
        assert info.value.missing == [(3, "sent_inc")]

    def test_absent_column(self) -> None:
        components = complete_components(range(3))
        del components["delta_beta0"]
        with pytest.raises(AlignmentError) as info:
            assemble_features(components, {}, list(range(3)))
        assert info.value.missing == [(w, "delta_beta0") for w in range(3)]

    def test_no_complete_week(self) -> None:
        components = complete_components(range(0))
        with pytest.raises(AlignmentError):
            assemble_features(components, {}, [0, 1])


def test_feature_row_rejects_non_finite_values() -> None:
    values = dict.fromkeys(COLUMN_FIELDS.values(), 0.0)
    values["puell_mult"] = 1.0
    assert FeatureRow(week=3, **values).target is None
    with pytest.raises(InputValidationError):
        FeatureRow(week=3, target=float("nan"), **values)
    with pytest.raises(InputValidationError):
        FeatureRow(week=3, **{**values, "price": float("inf")})
