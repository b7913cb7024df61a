import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarbandit.errors import EmptyGraph, ParseError
from polarbandit.graph import (BUNDLED, WeightedGraph, bundled_graph, community_sizes,
                               erdos_renyi, laplacian, load_edge_list, make_graph,
                               sbm_two_community)


def union_find_components(g):
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in g.edges:
        parent[find(i)] = find(j)
    return len({find(x) for x in range(g.n)})


class TestGenerators:
    def test_er_empty(self):
        assert erdos_renyi(5, 0.0, 1).num_edges == 0

    def test_er_complete(self):
        assert erdos_renyi(5, 1.0, 1).num_edges == 10

    def test_er_edge_count_binomial(self):
        m = erdos_renyi(100, 0.2, 12345).num_edges
        mean = 0.2 * 4950
        assert abs(m - mean) <= 3 * math.sqrt(4950 * 0.2 * 0.8)

    def test_er_deterministic(self):
        assert erdos_renyi(20, 0.3, 7) == erdos_renyi(20, 0.3, 7)

    def test_er_rejects_bad_p(self):
        with pytest.raises(ValueError):
            erdos_renyi(4, 1.5)

    def test_sbm_two_cliques(self):
        g = sbm_two_community(4, 0.75, 1.0, 0.0, 0)
        assert sorted(g.edges) == [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]
        assert g.degree()[3] == 0

    def test_sbm_empty(self):
        assert sbm_two_community(8, 0.75, 0.0, 0.0, 0).num_edges == 0

    def test_sbm_sizes(self):
        assert community_sizes(16, 0.75) == (12, 4)
        g = sbm_two_community(16, 0.75, 0.5, 0.07, 3)
        # no inter-community edges survive with p_out = 0, so the block boundary is at 12
        g0 = sbm_two_community(16, 0.75, 1.0, 0.0, 3)
        assert union_find_components(g0) == 2
        assert g.n == 16

    def test_make_graph_unknown(self):
        with pytest.raises(ValueError):
            make_graph("ba", 5)

    def test_make_graph_warns_when_disconnected(self, caplog):
        with caplog.at_level(logging.WARNING):
            make_graph("er", 6, 0, p=0.0)
        assert "disconnected" in caplog.text


class TestLaplacian:
    def test_single_edge(self, p2):
        np.testing.assert_array_equal(laplacian(p2), [[1, -1], [-1, 1]])

    def test_empty(self):
        np.testing.assert_array_equal(laplacian(WeightedGraph.from_edges(3, [])), np.zeros((3, 3)))

    def test_triangle(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
        np.testing.assert_array_equal(laplacian(g), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

    @given(st.integers(0, 10_000), st.integers(1, 12), st.floats(0.0, 1.0))
    def test_psd_rowsum_components(self, seed, n, p):
        g = erdos_renyi(n, p, seed)
        lap = laplacian(g)
        vals = np.linalg.eigvalsh(lap)
        assert vals.min() >= -1e-9
        assert np.abs(lap.sum(axis=1)).max() <= 1e-12
        zeros = int(np.sum(np.abs(vals) < 1e-9))
        assert zeros == union_find_components(g) == g.num_components()


class TestWeightedGraph:
    def test_canonical_orientation(self):
        g = WeightedGraph.from_edges(3, [(2, 0, 0.5)])
        assert g.edges == [(0, 2, 0.5)]

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            WeightedGraph(2, np.array([1]), np.array([1]), np.array([1.0]))

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            WeightedGraph.from_edges(2, [(0, 1, 0.0)])

    def test_csr_matches_adjacency(self):
        g = erdos_renyi(7, 0.5, 2)
        indptr, indices, weights = g.csr()
        dense = np.zeros((7, 7))
        for r in range(7):
            dense[r, indices[indptr[r]:indptr[r + 1]]] = weights[indptr[r]:indptr[r + 1]]
        np.testing.assert_array_equal(dense, g.adjacency())


class TestEdgeList:
    def test_basic(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1 1.0\n1 2 2.0")
        g = load_edge_list(f)
        assert g.n == 3 and g.num_edges == 2
        assert g.edges == [(0, 1, 1.0), (1, 2, 2.0)]

    def test_self_loop_skipped(self, tmp_path, caplog):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n2 2 1.0\n")
        with caplog.at_level(logging.WARNING):
            g = load_edge_list(f)
        assert g.n == 3 and g.num_edges == 1
        assert "self-loop" in caplog.text

    def test_duplicate_keeps_first(self, tmp_path, caplog):
        f = tmp_path / "g.txt"
        f.write_text("# comment\na b 2.0\nb a 5.0\n")
        with caplog.at_level(logging.WARNING):
            g = load_edge_list(f)
        assert g.edges == [(0, 1, 2.0)]
        assert g.labels == ("a", "b")
        assert "duplicate" in caplog.text

    def test_default_weight_and_string_ids(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("alice bob\nbob carol 0.5\n")
        g = load_edge_list(f)
        assert g.labels == ("alice", "bob", "carol")
        assert g.edges == [(0, 1, 1.0), (1, 2, 0.5)]

    @pytest.mark.parametrize("body, line", [("0 1\n0 1 2 3\n", 2), ("0 1 x\n", 1),
                                            ("0 1\n\n1 2 -1\n", 3)])
    def test_parse_errors_carry_line(self, tmp_path, body, line):
        f = tmp_path / "g.txt"
        f.write_text(body)
        with pytest.raises(ParseError) as info:
            load_edge_list(f)
        assert info.value.line == line

    def test_empty(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("# nothing\n")
        with pytest.raises(EmptyGraph):
            load_edge_list(f)

    def test_karate(self):
        g = bundled_graph("karate")
        assert (g.n, g.num_edges) == (34, 78)

    @pytest.mark.parametrize("name", BUNDLED)
    def test_bundled_load(self, name):
        g = bundled_graph(name)
        assert g.n > 0 and g.num_edges > 0

    def test_unknown_bundled(self):
        with pytest.raises(ValueError):
            bundled_graph("nope")
