"""Tests for weekly digraphs, undirected projection and top-edge filters"""

import math
import random
from pathlib import Path

import numpy as np
import pytest

from ledgertopo.graph_core import (
    DirectedGraph,
    UndirectedGraph,
    build_digraph,
    dump_edge_list,
    filter_top_edges,
    filter_top_records,
    to_undirected,
)
from ledgertopo.utils.exceptions import InputValidationError
from tests.helpers.factories import random_digraph, record, window


def test_parallel_transfers_are_summed() -> None:
    """Test that A->B 2 and A->B 3 become one arc of weight 5"""
    graph = build_digraph(
        window(
            [
                record(0, "A", "B", 2.0),
                record(1, "A", "B", 3.0),
                record(2, "B", "C", 1.0),
            ]
        )
    )
    assert graph.labelled_arcs() == {("A", "B"): 5.0, ("B", "C"): 1.0}
    assert graph.vertices == frozenset({"A", "B", "C"})


def test_direction_is_preserved() -> None:
    """Test that opposite transfers stay separate arcs"""
    graph = build_digraph(window([record(0, "A", "B", 4.0), record(0, "B", "A", 5.0)]))
    assert graph.labelled_arcs() == {("A", "B"): 4.0, ("B", "A"): 5.0}


def test_empty_window() -> None:
    """Test that an empty week gives the empty graph"""
    graph = build_digraph(window([]))
    assert graph.num_vertices == 0 and graph.num_arcs == 0


def test_record_order_does_not_matter() -> None:
    """Test that shuffled records build an identical graph"""
    rng = np.random.default_rng(5)
    records = [
        record(
            float(i) / 100, f"w{rng.integers(0, 6)}", f"x{rng.integers(0, 6)}", float(a)
        )
        for i, a in enumerate(rng.uniform(0.1, 100.0, size=60))
    ]
    shuffled = list(records)
    random.Random(1).shuffle(shuffled)
    assert build_digraph(window(records)) == build_digraph(window(shuffled))


def test_weight_mass_is_conserved() -> None:
    """Test that arc weights sum to the total transferred amount"""
    rng = np.random.default_rng(9)
    records = [
        record(0, f"w{rng.integers(0, 5)}", f"x{rng.integers(0, 5)}", float(a))
        for a in rng.uniform(0.1, 10.0, size=80)
    ]
    graph = build_digraph(window(records))
    assert math.isclose(
        math.fsum(graph.arcs.values()),
        math.fsum(r.amount for r in records),
        rel_tol=1e-12,
    )


class TestUndirected:
    """Projection to unordered pairs"""

    def test_opposite_arcs_are_merged(self) -> None:
        """Test that A->B 4 and B->A 5 give edge {A,B} of weight 9"""
        arcs = {("A", "B"): 4.0, ("B", "A"): 5.0}
        graph = to_undirected(DirectedGraph.from_arcs(arcs))
        assert graph.edges == {(0, 1): 9.0}

    def test_single_arc(self) -> None:
        graph = to_undirected(DirectedGraph.from_arcs({("A", "B"): 2.0}))
        assert graph.edges == {(0, 1): 2.0}

    def test_empty(self) -> None:
        graph = to_undirected(DirectedGraph.from_arcs({}))
        assert graph.num_edges == 0 and graph.num_vertices == 0

    def test_duplicate_edge_rejected(self) -> None:
        """Test that both orientations of one pair are one edge"""
        with pytest.raises(InputValidationError):
            UndirectedGraph.from_edges({("A", "B"): 1.0, ("B", "A"): 2.0})


@pytest.mark.parametrize(
    "arcs",
    [{("A", "A"): 1.0}, {("A", "B"): 0.0}, {("A", "B"): -3.0}],
)
def test_invalid_arcs_rejected(arcs: dict) -> None:
    """Test that self-loops and non-positive weights are rejected"""
    with pytest.raises(InputValidationError):
        DirectedGraph.from_arcs(arcs)


class TestTopFilter:
    """Top-fraction arc filters"""

    def test_top_one_percent_of_distinct_weights(self) -> None:
        """Test that 1% of 100 distinct weights keeps the heaviest arc"""
        arcs = {(f"a{i}", f"b{i}"): float(i + 1) for i in range(100)}
        graph = DirectedGraph.from_arcs(arcs)
        top = filter_top_edges(graph, 0.01)
        assert top.labelled_arcs() == {("a99", "b99"): 100.0}
        assert top.vertices == frozenset({"a99", "b99"})

    def test_ties_are_kept(self) -> None:
        """Test that equal weights are all retained"""
        graph = DirectedGraph.from_arcs({(f"a{i}", f"b{i}"): 7.0 for i in range(50)})
        assert filter_top_edges(graph, 0.01).num_arcs == 50

    def test_full_fraction_is_identity(self) -> None:
        graph = random_digraph(np.random.default_rng(2), 15)
        assert filter_top_edges(graph, 1.0).labelled_arcs() == graph.labelled_arcs()

    def test_empty_graph(self) -> None:
        graph = DirectedGraph.from_arcs({})
        assert filter_top_edges(graph, 0.01) == graph

    @pytest.mark.parametrize("fraction", [0.0, 1.2])
    def test_invalid_fraction(self, fraction: float) -> None:
        with pytest.raises(InputValidationError):
            filter_top_edges(DirectedGraph.from_arcs({("A", "B"): 1.0}), fraction)

    def test_filtered_graph_is_heaviest_subgraph(self) -> None:
        """Test size and weight bounds of the filter on random graphs"""
        rng = np.random.default_rng(4)
        for _ in range(50):
            graph = random_digraph(rng, 20)
            if graph.num_arcs == 0:
                continue
            q = float(rng.uniform(0.01, 1.0))
            top = filter_top_edges(graph, q)
            kept = top.labelled_arcs()
            full = graph.labelled_arcs()
            assert kept.items() <= full.items()
            assert len(kept) >= math.ceil(round(q * len(full), 9))
            dropped = [w for arc, w in full.items() if arc not in kept]
            if dropped:
                assert max(dropped) < min(kept.values())

    def test_raw_and_aggregated_modes_differ(self) -> None:
        """Test thresholding individual amounts against aggregated arc weights"""
        records = [
            record(0, "A", "B", 60.0),
            record(1, "A", "B", 50.0),
            record(2, "C", "D", 100.0),
            record(3, "E", "F", 10.0),
        ]
        raw = filter_top_records(window(records), 0.5)
        assert raw.labelled_arcs() == {("A", "B"): 60.0, ("C", "D"): 100.0}
        aggregated = filter_top_edges(build_digraph(window(records)), 0.5)
        assert aggregated.labelled_arcs() == {("A", "B"): 110.0, ("C", "D"): 100.0}


def test_dump_edge_list(tmp_path: Path) -> None:
    """Test the edge list and its id map"""
    graph = UndirectedGraph.from_edges({("B", "A"): 2.5, ("B", "C"): 1.0})
    id_path = dump_edge_list(graph, tmp_path / "week.edges")
    assert (tmp_path / "week.edges").read_text().splitlines() == ["0 1 2.5", "1 2 1.0"]
    assert id_path.read_text().splitlines() == ["0 A", "1 B", "2 C"]
