"""Betti increments and the Betti-based model feature.

Increments compare decile indices, not raw epsilon values: every week has its
own deciles, so ``beta^(eps_40)`` of two weeks is compared position by
position.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from ledgertopo.config import DECILE_LEVELS
from ledgertopo.filtration_homology import BettiSequence
from ledgertopo.utils.exceptions import InputValidationError, SequenceMismatchError


@dataclass(frozen=True)
class BettiIncrement:
    """Componentwise week-over-week difference of two Betti sequences.

    ``direction`` is ``"left"`` for ``beta(t) - beta(t-1)`` and ``"right"`` for
    ``beta(t+1) - beta(t)``; ``week`` is always ``t``.
    """

    week: int
    p: int
    values: tuple[int, ...]
    direction: str = "left"

    def at(self, k: int) -> int:
        """Component at decile index ``k``."""
        if k not in DECILE_LEVELS:
            raise InputValidationError(
                f"Decile index {k} is not on the grid",
                field="k",
                value=k,
                expected_type="one of 10, 20, ..., 100",
            )
        return self.values[DECILE_LEVELS.index(k)]


def _difference(later: BettiSequence, earlier: BettiSequence) -> tuple[int, ...]:
    if later.p != earlier.p:
        raise SequenceMismatchError(
            f"Cannot difference beta_{later.p} and beta_{earlier.p} sequences"
        )
    if later.week != earlier.week + 1:
        raise SequenceMismatchError(
            f"Weeks {earlier.week} and {later.week} are not consecutive"
        )
    return tuple(a - b for a, b in zip(later.values, earlier.values))


def left_increment(seq_t: BettiSequence, seq_prev: BettiSequence) -> BettiIncrement:
    """``beta_p(t) - beta_p(t-1)`` at matching decile indices.

    Raises:
        SequenceMismatchError: On differing ``p``, non-consecutive weeks or t = 0
    """
    if seq_t.week < 1:
        raise SequenceMismatchError("Week 0 has no predecessor")
    return BettiIncrement(seq_t.week, seq_t.p, _difference(seq_t, seq_prev))


def right_increment(seq_next: BettiSequence, seq_t: BettiSequence) -> BettiIncrement:
    """Forward increment ``beta_p(t+1) - beta_p(t)``, reported at week ``t``."""
    return BettiIncrement(seq_t.week, seq_t.p, _difference(seq_next, seq_t), "right")


def select_betti_feature(increment: BettiIncrement, k: int = 40, p: int = 0) -> int:
    """Extract ``Delta beta_p^(eps_k)`` from an increment.

    Raises:
        InputValidationError: If ``increment.p != p`` or ``k`` is off the grid
    """
    if increment.p != p:
        raise InputValidationError(
            f"Expected a beta_{p} increment, got beta_{increment.p}",
            field="p",
            value=increment.p,
            expected_type=str(p),
        )
    return increment.at(k)


def increment_column(p: int, k: int) -> str:
    """Feature-matrix column name of one left increment component."""
    return f"delta_beta{p}_e{k}"


def increment_grid(
    sequences: Mapping[int, Sequence[BettiSequence]],
) -> dict[str, dict[int, int]]:
    """Every left increment component, keyed by column and week.

    Args:
        sequences: Week -> Betti sequences of that week (any of p = 0, 1)

    Returns:
        ``{"delta_beta0_e10": {week: value}, ...}`` for every week whose
        predecessor is also present
    """
    grid: dict[str, dict[int, int]] = {}
    for week in sorted(sequences):
        if week - 1 not in sequences:
            continue
        previous = {s.p: s for s in sequences[week - 1]}
        for seq in sequences[week]:
            if seq.p not in previous:
                continue
            inc = left_increment(seq, previous[seq.p])
            for k, value in zip(DECILE_LEVELS, inc.values):
                grid.setdefault(increment_column(seq.p, k), {})[week] = value
    return grid
