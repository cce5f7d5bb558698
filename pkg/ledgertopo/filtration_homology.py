"""Decile graph filtrations and Betti numbers of their flag complexes.

The flag complex of a threshold subgraph is truncated at dimension 2: its
simplices are vertices, edges and 3-cliques. Over GF(2),

    beta0 = |V| - rank d1
    beta1 = |E| - rank d1 - rank d2

where ``rank d1`` is the number of successful union-find merges and ``rank d2``
comes from column reduction of the triangle boundary matrix, stored as
Python-int bitsets over edge indices.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Optional

from ledgertopo.config import DECILE_LEVELS
from ledgertopo.graph_core import UndirectedGraph
from ledgertopo.ingest import WeekWindow
from ledgertopo.quantiles import decile_thresholds
from ledgertopo.utils.exceptions import DegenerateWeekError, InputValidationError
from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)

THRESHOLD_MODES = ("aggregated", "raw")


@dataclass(frozen=True)
class FiltrationScale:
    k: int
    epsilon: float


@dataclass(frozen=True)
class ThresholdSubgraph:
    """Edges with weight <= epsilon and the vertices they touch."""

    scale: FiltrationScale
    vertices: frozenset[int]
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LevelStats:
    """Simplex counts and boundary ranks of one filtration level."""

    k: int
    epsilon: float
    vertices: int
    edges: int
    triangles: int
    rank_d1: int
    rank_d2: int

    @property
    def betti0(self) -> int:
        return self.vertices - self.rank_d1

    @property
    def betti1(self) -> int:
        return self.edges - self.rank_d1 - self.rank_d2


@dataclass(frozen=True)
class BettiSequence:
    week: int
    p: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.p not in (0, 1):
            raise InputValidationError(
                f"Homology dimension must be 0 or 1, got {self.p}",
                field="p",
                value=self.p,
                expected_type="0 or 1",
            )
        if len(self.values) != len(DECILE_LEVELS) or min(self.values) < 0:
            raise InputValidationError(
                "A Betti sequence holds 10 non-negative values",
                field="values",
                value=self.values,
            )


class UnionFind:
    """Disjoint sets over hashable items with path compression and union by rank."""

    def __init__(self) -> None:
        self.parent: dict[int, int] = {}
        self.rank: dict[int, int] = {}

    def add(self, x: int) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if already joined."""
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


class BoundaryReducer:
    """Incremental GF(2) column reduction; columns are int bitsets.

    Each reduced column is stored under its highest set bit, so a new column
    is reduced by XOR-ing stored columns until its pivot is free or it
    vanishes.
    """

    def __init__(self) -> None:
        self.pivots: dict[int, int] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, column: int) -> bool:
        """Reduce ``column`` against the stored basis; True if the rank grew."""
        while column:
            pivot = column.bit_length() - 1
            basis = self.pivots.get(pivot)
            if basis is None:
                self.pivots[pivot] = column
                return True
            column ^= basis
        return False


def compute_thresholds(
    weights: Iterable[float], levels: Sequence[int] = DECILE_LEVELS
) -> list[FiltrationScale]:
    """Nearest-rank deciles: ``epsilon_k`` is the ``ceil(k*n/100)``-th smallest.

    Raises:
        DegenerateWeekError: If the weight multiset is empty
    """
    ordered = sorted(weights)
    if not ordered:
        raise DegenerateWeekError(
            "Cannot build a filtration from an empty weight multiset",
            suggestions=["Weeks without transactions have no Betti sequence"],
        )
    values = decile_thresholds(ordered, levels)
    return [FiltrationScale(k=k, epsilon=e) for k, e in zip(levels, values)]


def week_thresholds(
    graph: UndirectedGraph,
    mode: str = "aggregated",
    window: Optional[WeekWindow] = None,
) -> list[FiltrationScale]:
    """Decile scales over edge weights (``aggregated``) or raw amounts (``raw``)."""
    if mode == "aggregated":
        return compute_thresholds(graph.edges.values())
    if mode == "raw":
        if window is None:
            raise InputValidationError(
                "Raw threshold mode needs the week's transactions",
                field="window",
                expected_type="WeekWindow",
            )
        return compute_thresholds(r.amount for r in window.records)
    raise InputValidationError(
        f"Unknown threshold mode {mode!r}",
        field="threshold_mode",
        value=mode,
        expected_type=" or ".join(THRESHOLD_MODES),
    )


def threshold_subgraph(graph: UndirectedGraph, epsilon: float) -> ThresholdSubgraph:
    """Edges with ``W(e) <= epsilon``; isolated vertices are left out."""
    if not epsilon > 0:
        raise InputValidationError(
            f"epsilon must be positive, got {epsilon}",
            field="epsilon",
            value=epsilon,
            expected_type="float > 0",
        )
    edges = tuple(e for e, w in graph.edges.items() if w <= epsilon)
    vertices = frozenset(x for e in edges for x in e)
    return ThresholdSubgraph(
        scale=FiltrationScale(k=0, epsilon=epsilon), vertices=vertices, edges=edges
    )


def betti0(subgraph: ThresholdSubgraph) -> int:
    """Number of connected components."""
    uf = UnionFind()
    merges = sum(uf.union(u, v) for u, v in subgraph.edges)
    return len(subgraph.vertices) - merges


def enumerate_triangles(
    edges: Iterable[tuple[int, int]],
) -> list[tuple[int, int, int]]:
    """All 3-cliques ``(a, b, c)`` with ``a < b < c``, each listed once.

    For every edge ``a < b`` the sorted higher-neighbor lists of ``a`` and
    ``b`` are merged; common entries ``c > b`` close a triangle.
    """
    higher: dict[int, list[int]] = {}
    edge_list = []
    for u, v in edges:
        a, b = (u, v) if u < v else (v, u)
        higher.setdefault(a, []).append(b)
        edge_list.append((a, b))
    for nbrs in higher.values():
        nbrs.sort()

    triangles = []
    for a, b in sorted(edge_list):
        na, nb = higher.get(a, []), higher.get(b, [])
        i, j = 0, 0
        while i < len(na) and j < len(nb):
            x, y = na[i], nb[j]
            if x == y:
                if x > b:
                    triangles.append((a, b, x))
                i += 1
                j += 1
            elif x < y:
                i += 1
            else:
                j += 1
    return triangles


def betti1(subgraph: ThresholdSubgraph) -> int:
    """Rank of H1 of the flag complex over GF(2)."""
    edge_index = {
        (min(u, v), max(u, v)): i for i, (u, v) in enumerate(subgraph.edges)
    }
    reducer = BoundaryReducer()
    for a, b, c in enumerate_triangles(subgraph.edges):
        reducer.add(
            (1 << edge_index[(a, b)])
            | (1 << edge_index[(a, c)])
            | (1 << edge_index[(b, c)])
        )
    rank_d1 = len(subgraph.vertices) - betti0(subgraph)
    return len(subgraph.edges) - rank_d1 - reducer.rank


class FiltrationSweep:
    """Adds edges in weight order and keeps boundary ranks up to date.

    Edge indices follow insertion order, so a triangle's newest edge always
    carries its highest bit; union-find and reducer state carry over from one
    level to the next.
    """

    def __init__(self, graph: UndirectedGraph):
        self._pending = sorted(graph.edges.items(), key=lambda item: (item[1], item[0]))
        self._next = 0
        self._uf = UnionFind()
        self._reducer = BoundaryReducer()
        self._neighbors: dict[int, dict[int, int]] = {}
        self.rank_d1 = 0
        self.triangles = 0

    @property
    def edges(self) -> int:
        return self._next

    @property
    def vertices(self) -> int:
        return len(self._neighbors)

    def advance(self, epsilon: float) -> None:
        """Admit every pending edge with weight ``<= epsilon``."""
        pending = self._pending
        while self._next < len(pending) and pending[self._next][1] <= epsilon:
            (u, v), _ = self._pending[self._next]
            index = self._next
            self._next += 1

            nu = self._neighbors.setdefault(u, {})
            nv = self._neighbors.setdefault(v, {})
            if self._uf.union(u, v):
                self.rank_d1 += 1
            for w in sorted(nu.keys() & nv.keys()):
                self.triangles += 1
                self._reducer.add((1 << index) | (1 << nu[w]) | (1 << nv[w]))
            nu[v] = index
            nv[u] = index

    def stats(self, scale: FiltrationScale) -> LevelStats:
        return LevelStats(
            k=scale.k,
            epsilon=scale.epsilon,
            vertices=self.vertices,
            edges=self.edges,
            triangles=self.triangles,
            rank_d1=self.rank_d1,
            rank_d2=self._reducer.rank,
        )


def sweep_levels(
    graph: UndirectedGraph, scales: Sequence[FiltrationScale]
) -> list[LevelStats]:
    """Level statistics at every scale, computed in one incremental pass."""
    if any(b.epsilon < a.epsilon for a, b in zip(scales, scales[1:])):
        raise InputValidationError(
            "Filtration scales must be non-decreasing",
            field="scales",
            value=[s.epsilon for s in scales],
        )
    sweep = FiltrationSweep(graph)
    levels = []
    for scale in scales:
        sweep.advance(scale.epsilon)
        levels.append(sweep.stats(scale))
    return levels


def betti_sequence(
    graph: UndirectedGraph, scales: Sequence[FiltrationScale], p: int
) -> BettiSequence:
    """``beta_p`` at each of the 10 scales, in ascending decile order."""
    if len(scales) != len(DECILE_LEVELS):
        raise InputValidationError(
            f"Expected 10 filtration scales, got {len(scales)}",
            field="scales",
            value=len(scales),
        )
    levels = sweep_levels(graph, scales)
    values = tuple(s.betti0 if p == 0 else s.betti1 for s in levels)
    return BettiSequence(week=graph.week, p=p, values=values)


def week_betti_sequences(
    graph: UndirectedGraph,
    mode: str = "aggregated",
    window: Optional[WeekWindow] = None,
) -> tuple[BettiSequence, BettiSequence]:
    """Both Betti sequences of one week from a single sweep.

    Raises:
        DegenerateWeekError: If the week has no edges to threshold
    """
    scales = week_thresholds(graph, mode, window)
    levels = sweep_levels(graph, scales)
    logger.debug(
        f"Week {graph.week}: {graph.num_edges} edges, "
        f"{levels[-1].triangles} triangles at eps_100"
    )
    return (
        BettiSequence(graph.week, 0, tuple(s.betti0 for s in levels)),
        BettiSequence(graph.week, 1, tuple(s.betti1 for s in levels)),
    )
