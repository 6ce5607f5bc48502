"""Tests for chaoscluster.graphs module."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from chaoscluster.cumulants import enumerate_partitions
from chaoscluster.exceptions import GraphError, GuardError
from chaoscluster.graphs import (
    Graph,
    RootedForest,
    cayley_count,
    connected_mask_filter,
    connected_masks,
    count_connected,
    enumerate_connected,
    enumerate_graphs,
    enumerate_rooted_forests,
    enumerate_trees,
    format_graph,
    graph_counts,
    is_connected,
    is_rooted_forest,
    leaves,
    mask_chunks,
    pair_slots,
    parse_graph,
    prufer_decode,
    prufer_encode,
    rooted_forest_count,
)

CONNECTED_COUNTS = {1: 1, 2: 1, 3: 4, 4: 38, 5: 728, 6: 26704}


class TestGraph:
    """Test the Graph bit-field representation."""

    def test_slot_order(self) -> None:
        """Test pair slots are in lexicographic order."""
        assert pair_slots(4) == ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))

    def test_from_edges(self) -> None:
        """Test edges map to the right mask bits."""
        g = Graph.from_edges(3, [(2, 1), (2, 3)])
        assert g.mask == 0b101
        assert g.edges == [(1, 2), (2, 3)]
        assert g.has_edge(3, 2)
        assert not g.has_edge(1, 3)
        assert g.degree(2) == 2

    def test_rejects_loops(self) -> None:
        """Test self-loops raise GraphError."""
        with pytest.raises(GraphError, match="loops"):
            Graph.from_edges(3, [(1, 1)])

    def test_rejects_foreign_vertex(self) -> None:
        """Test edges outside 1..k raise GraphError."""
        with pytest.raises(GraphError, match="outside"):
            Graph.from_edges(3, [(1, 4)])

    def test_vertex_guard(self) -> None:
        """Test more than 16 vertices raise GuardError."""
        with pytest.raises(GuardError):
            Graph(17)

    def test_format_parse(self) -> None:
        """Test the dump format parses back to the same graph."""
        g = Graph.from_edges(4, [(1, 2), (2, 4), (3, 4)])
        assert format_graph(g) == "4:1-2,2-4,3-4"
        assert parse_graph(format_graph(g)) == g

    def test_parse_malformed(self) -> None:
        """Test malformed dump lines raise GraphError."""
        with pytest.raises(GraphError, match="malformed"):
            parse_graph("x:1-2")


class TestEnumeration:
    """Test exhaustive graph enumeration."""

    @pytest.mark.parametrize(("k", "count"), [(1, 1), (3, 8), (4, 64)])
    def test_graph_counts(self, k: int, count: int) -> None:
        """Test |G_k| = 2^(k(k-1)/2)."""
        graphs = list(enumerate_graphs(k))
        assert len(graphs) == count
        assert len({g.mask for g in graphs}) == count

    @pytest.mark.parametrize(("k", "count"), sorted(CONNECTED_COUNTS.items()))
    def test_connected_counts(self, k: int, count: int) -> None:
        """Test |C_k| against the known sequence."""
        assert count_connected(k) == count

    def test_connected_filter_matches_bfs(self) -> None:
        """Test the vectorized filter agrees with graph search on k = 5."""
        masks = np.arange(1 << len(pair_slots(5)), dtype=np.uint64)
        fast = connected_mask_filter(5, masks)
        slow = np.array([is_connected(Graph(5, int(m))) for m in masks])
        assert np.array_equal(fast, slow)

    def test_enumerate_connected_all_connected(self) -> None:
        """Test every yielded graph is connected and distinct."""
        graphs = list(enumerate_connected(4))
        assert len(graphs) == 38
        assert all(is_connected(g) for g in graphs)

    def test_cached_masks_read_only(self) -> None:
        """Test the cached mask array cannot be modified."""
        masks = connected_masks(4)
        with pytest.raises(ValueError, match="read-only"):
            masks[0] = 0

    def test_cache_limit(self) -> None:
        """Test k = 8 must be streamed."""
        with pytest.raises(GuardError, match="stream"):
            connected_masks(8)

    def test_enumeration_guard(self) -> None:
        """Test k = 9 is refused."""
        with pytest.raises(GuardError):
            list(enumerate_graphs(9))

    def test_mask_chunks_cover_space(self) -> None:
        """Test chunks partition the mask range in order."""
        chunks = mask_chunks(5, chunk_size=100)
        assert chunks[0].start == 0
        assert chunks[-1].stop == 1 << 10
        assert all(a.stop == b.start for a, b in itertools.pairwise(chunks))

    @pytest.mark.runslow
    def test_connected_count_k8(self) -> None:
        """Test |C_8| by a full streamed scan."""
        assert count_connected(8) == 251548592


class TestTrees:
    """Test Prüfer coding and tree enumeration."""

    @pytest.mark.parametrize(("k", "count"), [(1, 1), (2, 1), (4, 16), (7, 16807)])
    def test_cayley(self, k: int, count: int) -> None:
        """Test |T_k| = k^(k-2)."""
        trees = list(enumerate_trees(k))
        assert len(trees) == count == cayley_count(k)
        assert len({t.mask for t in trees}) == count

    def test_trees_are_trees(self) -> None:
        """Test every enumerated tree is connected with k-1 edges."""
        assert all(t.is_tree() for t in enumerate_trees(5))

    def test_prufer_known(self) -> None:
        """Test a known Prüfer sequence decodes to its star."""
        star = prufer_decode((1, 1, 1), 5)
        assert star.edges == [(1, 2), (1, 3), (1, 4), (1, 5)]

    def test_prufer_roundtrip(self) -> None:
        """Test encoding inverts decoding for every sequence on k = 5."""
        for seq in itertools.product(range(1, 6), repeat=3):
            assert prufer_encode(prufer_decode(seq, 5)) == seq

    def test_prufer_wrong_length(self) -> None:
        """Test a sequence of the wrong length raises GraphError."""
        with pytest.raises(GraphError, match="length"):
            prufer_decode((1,), 5)

    def test_encode_rejects_non_tree(self) -> None:
        """Test encoding a cycle raises GraphError."""
        with pytest.raises(GraphError):
            prufer_encode(Graph.from_edges(3, [(1, 2), (2, 3), (1, 3)]))

    def test_tree_guard(self) -> None:
        """Test k = 10 trees are refused."""
        with pytest.raises(GuardError):
            next(enumerate_trees(10))

    def test_leaves(self) -> None:
        """Test leaves of a path, with and without protection."""
        path = Graph.from_edges(4, [(1, 2), (2, 3), (3, 4)])
        assert leaves(path) == [1, 4]
        assert leaves(path, protected={1}) == [4]


class TestRootedForests:
    """Test rooted forest enumeration."""

    @pytest.mark.parametrize(
        ("roots", "others", "count"),
        [({1}, {2, 3}, 3), ({1, 2}, set(), 1), ({1, 2}, {3}, 2)],
    )
    def test_small_counts(self, roots: set[int], others: set[int], count: int) -> None:
        """Test hand-counted forest families."""
        forests = list(enumerate_rooted_forests(roots, others))
        assert len(forests) == count
        assert len({f.edges for f in forests}) == count

    @pytest.mark.parametrize(("j", "i"), [(1, 4), (2, 3), (3, 3), (2, 5)])
    def test_closed_form(self, j: int, i: int) -> None:
        """Test counts match j (j + i)^(i - 1)."""
        roots = range(1, j + 1)
        others = range(j + 1, j + i + 1)
        forests = list(enumerate_rooted_forests(roots, others))
        assert len(forests) == rooted_forest_count(j, i)
        assert all(is_rooted_forest(f) for f in forests)

    def test_single_root_gives_trees(self) -> None:
        """Test forests with one root are the spanning trees."""
        forests = {f.as_graph().mask for f in enumerate_rooted_forests({1}, {2, 3, 4})}
        assert forests == {t.mask for t in enumerate_trees(4)}

    def test_overlap_rejected(self) -> None:
        """Test overlapping root and non-root sets raise GraphError."""
        with pytest.raises(GraphError, match="overlap"):
            list(enumerate_rooted_forests({1, 2}, {2, 3}))

    def test_empty_roots_rejected(self) -> None:
        """Test an empty root set raises GraphError."""
        with pytest.raises(GraphError, match="root"):
            list(enumerate_rooted_forests(set(), {1}))

    def test_validator_rejects_two_roots_per_tree(self) -> None:
        """Test the validator catches a component with two roots."""
        bad = RootedForest(frozenset({1, 2}), frozenset({3}), frozenset({(1, 3), (2, 3)}))
        assert not is_rooted_forest(bad)

    def test_forest_guard(self) -> None:
        """Test more than nine vertices are refused."""
        with pytest.raises(GuardError):
            list(enumerate_rooted_forests({1}, range(2, 11)))


class TestGraphCounts:
    """Test the enumeration audit."""

    def test_graph_counts_k4(self) -> None:
        """Test the audit row for k = 4."""
        assert graph_counts(4) == {"k": 4, "graphs": 64, "connected": 38, "trees": 16, "cayley": 16}

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_graphs_split_into_connected_components(self, k: int) -> None:
        """Test |G_k| equals the sum over set partitions of products of |C_block|."""
        connected = {size: count_connected(size) for size in range(1, k + 1)}
        total = sum(
            math.prod(connected[len(block)] for block in part.blocks)
            for part in enumerate_partitions(range(1, k + 1))
        )
        assert total == sum(1 for _ in enumerate_graphs(k)) == 2 ** (k * (k - 1) // 2)
