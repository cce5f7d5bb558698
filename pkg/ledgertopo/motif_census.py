"""Census of three directed 3-node motifs built from mutual dyads.

motif 1: two mutual dyads sharing a center, the third pair non-adjacent
motif 2: a mutual dyad ``a <-> b`` closed by ``b -> c`` and ``c -> a``
motif 3: the complete mutual triangle

A vertex triple is classified by its 6-bit arc pattern. The 64 patterns are
mapped to motif ids once, at import, by trying every vertex relabeling, so
both chiralities of motif 2 fall into the same class.
"""

from collections.abc import Mapping
from dataclasses import dataclass
from itertools import permutations
from math import comb

from ledgertopo.filtration_homology import enumerate_triangles
from ledgertopo.graph_core import DirectedGraph
from ledgertopo.utils.exceptions import InputValidationError, SequenceMismatchError

MOTIF_IDS = (1, 2, 3)
MOTIF_MODES = ("induced", "noninduced")

# Bit i of a triad code is set when ARC_SLOTS[i] is an arc between the
# triple's positions 0, 1 and 2.
ARC_SLOTS = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1))

_PATTERNS = {
    1: frozenset({(0, 1), (1, 0), (1, 2), (2, 1)}),
    2: frozenset({(0, 1), (1, 0), (1, 2), (2, 0)}),
    3: frozenset(ARC_SLOTS),
}


def _arcs_of(code: int) -> frozenset[tuple[int, int]]:
    return frozenset(slot for i, slot in enumerate(ARC_SLOTS) if code >> i & 1)


def _relabelings(arcs: frozenset[tuple[int, int]]) -> list[frozenset[tuple[int, int]]]:
    return [frozenset((p[a], p[b]) for a, b in arcs) for p in permutations(range(3))]


def _build_tables() -> tuple[tuple[int, ...], tuple[frozenset[int], ...]]:
    induced = []
    contained = []
    for code in range(64):
        variants = _relabelings(_arcs_of(code))
        induced.append(
            next((m for m, pat in _PATTERNS.items() if pat in variants), 0)
        )
        contained.append(
            frozenset(
                m
                for m, pat in _PATTERNS.items()
                if any(pat <= v for v in variants)
            )
        )
    return tuple(induced), tuple(contained)


INDUCED_CLASS, CONTAINED_CLASSES = _build_tables()


def triad_code(arcs: Mapping[tuple[int, int], float], a: int, b: int, c: int) -> int:
    """6-bit arc pattern of the triple placed at positions ``(a, b, c)``."""
    nodes = (a, b, c)
    code = 0
    for i, (x, y) in enumerate(ARC_SLOTS):
        if (nodes[x], nodes[y]) in arcs:
            code |= 1 << i
    return code


@dataclass(frozen=True)
class MotifCensus:
    week: int
    counts: Mapping[int, int]

    def __getitem__(self, motif: int) -> int:
        return self.counts[motif]


@dataclass(frozen=True)
class MotifIncrement:
    week: int
    deltas: Mapping[int, int]

    def __getitem__(self, motif: int) -> int:
        return self.deltas[motif]


def census_triads(graph: DirectedGraph, mode: str = "induced") -> MotifCensus:
    """Count vertex triples matching motifs 1-3 in a (filtered) digraph.

    Triples whose three pairs are all adjacent are found by triangle
    enumeration on the undirected skeleton and classified by table lookup.
    Open triples only ever match motif 1; they are counted per center as
    ``C(mutual_degree, 2)`` minus the mutual-neighbor pairs that are adjacent.

    Args:
        graph: Digraph to census, normally the top-q filtered week graph
        mode: ``induced`` (one class per triple, exact arc pattern) or
            ``noninduced`` (a triple counts for every motif it contains)
    """
    if mode not in MOTIF_MODES:
        raise InputValidationError(
            f"Unknown motif mode {mode!r}",
            field="motif_mode",
            value=mode,
            expected_type=" or ".join(MOTIF_MODES),
        )
    counts = {m: 0 for m in MOTIF_IDS}
    if graph.num_vertices < 3:
        return MotifCensus(graph.week, counts)

    arcs = graph.arcs
    mutual: dict[int, set[int]] = {}
    skeleton = set()
    for u, v in arcs:
        skeleton.add((u, v) if u < v else (v, u))
        if u < v and (v, u) in arcs:
            mutual.setdefault(u, set()).add(v)
            mutual.setdefault(v, set()).add(u)

    open_and_closed = sum(comb(len(nbrs), 2) for nbrs in mutual.values())
    centers_in_triangles = 0
    for a, b, c in enumerate_triangles(skeleton):
        code = triad_code(arcs, a, b, c)
        centers = sum(
            1
            for x, y, z in ((a, b, c), (b, a, c), (c, a, b))
            if y in mutual.get(x, ()) and z in mutual.get(x, ())
        )
        if mode == "induced":
            centers_in_triangles += centers
            motif = INDUCED_CLASS[code]
            if motif in (2, 3):
                counts[motif] += 1
        else:
            centers_in_triangles += max(centers - 1, 0)
            for motif in CONTAINED_CLASSES[code]:
                if motif != 1:
                    counts[motif] += 1

    counts[1] = open_and_closed - centers_in_triangles
    return MotifCensus(graph.week, counts)


def motif_increment(census_t: MotifCensus, census_prev: MotifCensus) -> MotifIncrement:
    """``count_t - count_{t-1}`` per motif.

    Raises:
        SequenceMismatchError: For week 0 or non-consecutive censuses
    """
    if census_t.week < 1:
        raise SequenceMismatchError("Week 0 has no predecessor")
    if census_t.week != census_prev.week + 1:
        raise SequenceMismatchError(
            f"Weeks {census_prev.week} and {census_t.week} are not consecutive"
        )
    return MotifIncrement(
        census_t.week, {m: census_t[m] - census_prev[m] for m in MOTIF_IDS}
    )
