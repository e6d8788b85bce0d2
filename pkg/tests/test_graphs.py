"""Graph constructors, neighborhoods, connectivity, and JSON round trips."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msync import (
    circulant_graph,
    cycle_graph,
    graph_from_edges,
    graph_from_json,
    is_connected,
    neighbors,
)


class TestCycleGraph:
    def test_smallest_cycle(self):
        g = cycle_graph(3)
        assert g.edges == ((1, 2), (1, 3), (2, 3))
        assert all(w == 1.0 for w in g.edge_weights)

    def test_every_node_has_degree_two(self):
        g = cycle_graph(4)
        assert all(len(neighbors(g, i)) == 2 for i in range(1, 5))

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            cycle_graph(2)

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError):
            cycle_graph(3, [1.0, 0.0, 1.0])

    def test_weight_positions(self):
        g = cycle_graph(4, [10.0, 20.0, 30.0, 40.0])
        assert g.weight(1, 2) == 10.0
        assert g.weight(2, 3) == 20.0
        assert g.weight(3, 4) == 30.0
        assert g.weight(4, 1) == 40.0

    def test_weight_lookup_order_independent(self):
        g = cycle_graph(5, [1, 2, 3, 4, 5])
        for i, j in g.edges:
            assert g.weight(i, j) == g.weight(j, i)


class TestCirculantGraph:
    def test_k1_equals_cycle(self):
        assert circulant_graph(5, 1).edges == cycle_graph(5).edges

    def test_edge_count_is_k_times_n(self):
        assert circulant_graph(6, 2).n_edges == 12

    def test_2k_ge_n_rejected(self):
        with pytest.raises(ValueError):
            circulant_graph(4, 2)

    def test_neighbors_within_cyclic_distance(self):
        g = circulant_graph(7, 2)
        assert neighbors(g, 1) == {2, 3, 6, 7}

    @given(st.integers(min_value=3, max_value=40), st.integers(min_value=1, max_value=19))
    @settings(max_examples=60, deadline=None)
    def test_cycle_is_subgraph(self, n, k):
        if 2 * k >= n:
            with pytest.raises(ValueError):
                circulant_graph(n, k)
            return
        g = circulant_graph(n, k)
        assert g.n_edges == k * n
        cycle_edges = set(cycle_graph(n).edges)
        assert cycle_edges <= set(g.edges)
        assert g.has_cycle(tuple(range(1, n + 1)))


class TestEdgeLists:
    def test_disconnected_triangles(self):
        g = graph_from_edges(
            6, [(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0), (4, 5, 1.0), (5, 6, 1.0), (4, 6, 1.0)]
        )
        assert not is_connected(g)
        assert is_connected(cycle_graph(6))

    def test_node_out_of_range(self):
        g = cycle_graph(5)
        with pytest.raises(ValueError):
            neighbors(g, 6)

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            graph_from_edges(3, [(1, 1, 1.0)])

    def test_two_agents_single_edge(self):
        g = graph_from_edges(2, [(1, 2, 1.0)])
        assert is_connected(g)
        assert neighbors(g, 1) == {2}


class TestJson:
    @pytest.mark.parametrize(
        "g",
        [
            cycle_graph(5, [1, 2, 3, 4, 5]),
            circulant_graph(7, 2, 0.5),
            graph_from_edges(4, [(1, 2, 1.0), (2, 3, 2.0), (3, 4, 1.5), (1, 4, 0.5)]),
        ],
        ids=["cycle", "circulant", "edges"],
    )
    def test_round_trip(self, g):
        again = graph_from_json(g.to_json())
        assert again.n_agents == g.n_agents
        assert again.edges == g.edges
        assert again.edge_weights == g.edge_weights

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            graph_from_json({"type": "star", "n": 4})

    def test_unknown_keys(self):
        with pytest.raises(ValueError):
            graph_from_json({"type": "cycle", "n": 4, "bogus": 1})
