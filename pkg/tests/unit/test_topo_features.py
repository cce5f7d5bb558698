"""Tests for Betti increments"""

import pytest

from ledgertopo.filtration_homology import BettiSequence
from ledgertopo.topo_features import (
    BettiIncrement,
    increment_column,
    increment_grid,
    left_increment,
    right_increment,
    select_betti_feature,
)
from ledgertopo.utils.exceptions import InputValidationError, SequenceMismatchError


def seq(week: int, p: int, *values: int) -> BettiSequence:
    return BettiSequence(week, p, tuple(values))


def test_left_increment() -> None:
    """Test the componentwise difference at matching decile indices"""
    current = seq(5, 0, 9, 8, 7, 6, 5, 4, 3, 2, 2, 1)
    previous = seq(4, 0, 7, 7, 7, 7, 7, 3, 3, 3, 1, 1)
    inc = left_increment(current, previous)
    assert inc.values == (2, 1, 0, -1, -2, 1, 0, -1, 1, 0)
    assert (inc.week, inc.p, inc.direction) == (5, 0, "left")
    assert inc.at(40) == -1


def test_right_increment_is_reported_at_earlier_week() -> None:
    inc = right_increment(seq(6, 1, *[3] * 10), seq(5, 1, *[1] * 10))
    assert inc.week == 5
    assert inc.direction == "right"
    assert inc.values == (2,) * 10


@pytest.mark.parametrize(
    "current,previous",
    [
        (seq(5, 0, *[1] * 10), seq(4, 1, *[1] * 10)),
        (seq(5, 0, *[1] * 10), seq(3, 0, *[1] * 10)),
        (seq(0, 0, *[1] * 10), seq(-1, 0, *[1] * 10)),
    ],
)
def test_mismatched_sequences(current: BettiSequence, previous: BettiSequence) -> None:
    """Test that differing p, gaps and week 0 are rejected"""
    with pytest.raises(SequenceMismatchError):
        left_increment(current, previous)


def test_select_betti_feature() -> None:
    """Test that the model feature is the eps_40 component of the beta0 increment"""
    inc = BettiIncrement(3, 0, (0, 0, 0, 4, 0, 0, 0, 0, 0, 0))
    assert select_betti_feature(inc) == 4
    assert select_betti_feature(inc, k=10) == 0
    with pytest.raises(InputValidationError):
        select_betti_feature(inc, p=1)
    with pytest.raises(InputValidationError):
        select_betti_feature(inc, k=45)


def test_increment_grid_skips_weeks_without_predecessor() -> None:
    """Test the grid of all increment components"""
    sequences = {
        0: [seq(0, 0, *[1] * 10), seq(0, 1, *[0] * 10)],
        1: [seq(1, 0, *[3] * 10), seq(1, 1, *[1] * 10)],
        3: [seq(3, 0, *[2] * 10), seq(3, 1, *[0] * 10)],
    }
    grid = increment_grid(sequences)
    assert len(grid) == 20
    assert grid[increment_column(0, 40)] == {1: 2}
    assert grid[increment_column(1, 100)] == {1: 1}
    assert increment_column(0, 40) == "delta_beta0_e40"
