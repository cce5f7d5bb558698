"""Nearest-rank order statistics shared by the filters and selectors."""

import math
from collections.abc import Sequence

from ledgertopo.utils.exceptions import InputValidationError


def rank_count(fraction: float, n: int) -> int:
    """Return ``ceil(fraction * n)`` clamped to ``[1, n]``.

    The product is rounded to 9 decimals first so that e.g. ``0.07 * 100``
    counts 7 and not 8.
    """
    if not 0 < fraction <= 1:
        raise InputValidationError(
            f"fraction must be in (0, 1], got {fraction}",
            field="fraction",
            value=fraction,
            expected_type="float in (0, 1]",
        )
    return min(n, max(1, math.ceil(round(fraction * n, 9))))


def nearest_rank(sorted_values: Sequence[float], fraction: float) -> float:
    """The ``ceil(fraction * n)``-th smallest element of an ascending sequence."""
    return sorted_values[rank_count(fraction, len(sorted_values)) - 1]


def top_threshold(values: Sequence[float], fraction: float) -> float:
    """Smallest value still inside the top ``ceil(fraction * n)`` elements.

    Keeping every value ``>=`` the returned threshold keeps exactly
    ``ceil(fraction * n)`` elements when values are distinct and more when
    the threshold value is tied.
    """
    ordered = sorted(values, reverse=True)
    return ordered[rank_count(fraction, len(ordered)) - 1]


def decile_thresholds(
    sorted_values: Sequence[float], levels: Sequence[int]
) -> list[float]:
    """Lower nearest-rank quantiles at percentage ``levels`` using integer math."""
    n = len(sorted_values)
    return [sorted_values[(level * n + 99) // 100 - 1] for level in levels]
