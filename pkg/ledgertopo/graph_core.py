"""Weekly weighted digraphs, their undirected projection and top-edge filters.

Wallet identifiers are interned to dense integer ids per graph: ids follow
the sorted order of the wallet identifiers, so the interning is independent of
record order and the ``labels`` tuple is the persisted id map.
"""

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

from ledgertopo.ingest import TransactionRecord, WeekWindow
from ledgertopo.quantiles import top_threshold
from ledgertopo.utils.exceptions import InputValidationError


def _intern(pairs: Iterable[tuple[str, str]]) -> tuple[tuple[str, ...], dict[str, int]]:
    labels = tuple(sorted({label for pair in pairs for label in pair}))
    return labels, {label: i for i, label in enumerate(labels)}


@dataclass(frozen=True)
class DirectedGraph:
    """Aggregated weighted digraph of one week.

    ``arcs`` maps ``(u, v)`` interned ids to the summed amount sent from
    ``labels[u]`` to ``labels[v]``; keys are sorted.
    """

    week: int
    labels: tuple[str, ...]
    arcs: Mapping[tuple[int, int], float]

    @classmethod
    def from_arcs(
        cls, weights: Mapping[tuple[str, str], float], week: int = 0
    ) -> "DirectedGraph":
        """Build from wallet-labelled arc weights."""
        for (u, v), w in weights.items():
            if u == v or not w > 0:
                raise InputValidationError(
                    f"Invalid arc {u}->{v} with weight {w}",
                    field="arc",
                    value=(u, v, w),
                    expected_type="u != v and weight > 0",
                )
        labels, ids = _intern(weights)
        arcs = {(ids[u], ids[v]): float(w) for (u, v), w in weights.items()}
        return cls(week=week, labels=labels, arcs=dict(sorted(arcs.items())))

    @property
    def vertices(self) -> frozenset[str]:
        return frozenset(self.labels)

    @property
    def num_vertices(self) -> int:
        return len(self.labels)

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def labelled_arcs(self) -> dict[tuple[str, str], float]:
        """Arc weights keyed by wallet identifiers."""
        return {(self.labels[u], self.labels[v]): w for (u, v), w in self.arcs.items()}


@dataclass(frozen=True)
class UndirectedGraph:
    """Undirected projection; ``edges`` keys are ``(u, v)`` with ``u < v``."""

    week: int
    labels: tuple[str, ...]
    edges: Mapping[tuple[int, int], float]

    @classmethod
    def from_edges(
        cls, weights: Mapping[tuple[str, str], float], week: int = 0
    ) -> "UndirectedGraph":
        """Build from wallet-labelled edge weights (either endpoint order)."""
        labels, ids = _intern(weights)
        edges: dict[tuple[int, int], float] = {}
        for (a, b), w in weights.items():
            if a == b or not w > 0:
                raise InputValidationError(
                    f"Invalid edge {a}-{b} with weight {w}",
                    field="edge",
                    value=(a, b, w),
                    expected_type="a != b and weight > 0",
                )
            u, v = sorted((ids[a], ids[b]))
            if (u, v) in edges:
                raise InputValidationError(
                    f"Duplicate edge {a}-{b}", field="edge", value=(a, b)
                )
            edges[(u, v)] = float(w)
        return cls(week=week, labels=labels, edges=dict(sorted(edges.items())))

    @property
    def num_vertices(self) -> int:
        return len(self.labels)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _graph_from_records(
    records: Iterable[TransactionRecord], week: int
) -> DirectedGraph:
    amounts: dict[tuple[str, str], list[float]] = {}
    for record in records:
        amounts.setdefault((record.sender, record.receiver), []).append(record.amount)
    labels, ids = _intern(amounts)
    arcs = {(ids[u], ids[v]): math.fsum(values) for (u, v), values in amounts.items()}
    return DirectedGraph(week=week, labels=labels, arcs=dict(sorted(arcs.items())))


def build_digraph(window: WeekWindow) -> DirectedGraph:
    """Aggregate a week's transfers into one arc per ordered wallet pair.

    Arc weights are exactly rounded sums (``math.fsum``), so the result does
    not depend on record order.
    """
    return _graph_from_records(window.records, window.index)


def to_undirected(graph: DirectedGraph) -> UndirectedGraph:
    """Project to one edge per unordered pair, weight ``W(u,v) + W(v,u)``."""
    edges: dict[tuple[int, int], float] = {}
    for (u, v), w in graph.arcs.items():
        key = (u, v) if u < v else (v, u)
        edges[key] = edges.get(key, 0.0) + w
    return UndirectedGraph(
        week=graph.week, labels=graph.labels, edges=dict(sorted(edges.items()))
    )


def filter_top_edges(graph: DirectedGraph, fraction: float) -> DirectedGraph:
    """Keep arcs whose weight is within the week's top ``fraction``.

    The threshold is the ``ceil(fraction * |A|)``-th largest arc weight; every
    arc tied with it is kept. Vertices shrink to the retained endpoints and
    are re-interned.
    """
    if not 0 < fraction <= 1:
        raise InputValidationError(
            f"fraction must be in (0, 1], got {fraction}",
            field="fraction",
            value=fraction,
            expected_type="float in (0, 1]",
        )
    if not graph.arcs:
        return graph
    threshold = top_threshold(list(graph.arcs.values()), fraction)
    kept = {
        (graph.labels[u], graph.labels[v]): w
        for (u, v), w in graph.arcs.items()
        if w >= threshold
    }
    return DirectedGraph.from_arcs(kept, week=graph.week)


def filter_top_records(window: WeekWindow, fraction: float) -> DirectedGraph:
    """Raw-amount variant of :func:`filter_top_edges`.

    The threshold is taken over individual transaction amounts before
    aggregation; an arc survives with the summed amount of its qualifying
    transfers.
    """
    if not window.records:
        return DirectedGraph(week=window.index, labels=(), arcs={})
    threshold = top_threshold([r.amount for r in window.records], fraction)
    return _graph_from_records(
        (r for r in window.records if r.amount >= threshold), window.index
    )


def dump_edge_list(graph: UndirectedGraph, path: Path) -> Path:
    """Write ``u v w`` lines (interned ids) and an ``id label`` map next to them.

    Returns:
        Path of the id-map file (``path`` with suffix ``.ids``)
    """
    lines = [f"{u} {v} {w!r}" for (u, v), w in graph.edges.items()]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    id_path = path.with_suffix(".ids")
    id_lines = [f"{i} {label}" for i, label in enumerate(graph.labels)]
    id_text = "\n".join(id_lines) + ("\n" if id_lines else "")
    id_path.write_text(id_text, encoding="utf-8")
    return id_path
