import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsprivacy import (
    DomainError, Topology, complete_graph, cycle_graph, induced_subgraph, is_connected,
    is_vertex_cut, path_graph, random_graph, vertex_connectivity,
)
from fsprivacy.graph import neighbors, oriented_edges

from oracles import brute_connectivity, brute_is_cut, components
from strategies import topologies


class TestTopology:
    def test_edges_are_sorted_and_oriented(self):
        t = Topology(4, [(3, 1), (2, 4), (1, 2)])
        assert t.edges == ((1, 2), (1, 3), (2, 4))
        assert oriented_edges(t) == t.edges

    @pytest.mark.parametrize("edges", [[(1, 1)], [(1, 2), (2, 1)], [(0, 1)], [(1, 4)]])
    def test_rejects_bad_edges(self, edges):
        with pytest.raises(DomainError):
            Topology(3, edges)

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            Topology(0)

    def test_json_round_trip(self):
        t = random_graph(7, 0.5, np.random.default_rng(1))
        assert Topology.from_json(t.to_json()) == t

    def test_from_dict_requires_ordered_pairs(self):
        with pytest.raises(DomainError):
            Topology.from_dict({"n": 3, "edges": [[2, 1]]})

    def test_edge_indices(self, k3):
        assert [k3.edge_index(i, j) for i, j in k3.edges] == [0, 1, 2]
        assert k3.directed_index(1, 3) == 2 and k3.directed_index(3, 1) == 3
        with pytest.raises(DomainError):
            path_graph(3).edge_index(1, 3)


class TestNeighbors:
    def test_k3(self, k3):
        assert neighbors(k3, 1) == {2, 3}

    def test_path(self, path3):
        assert neighbors(path3, 2) == {1, 3}
        assert neighbors(path3, 1) == {2}

    def test_out_of_range(self, k3):
        with pytest.raises(DomainError):
            neighbors(k3, 4)


class TestInducedSubgraph:
    def test_honest_pair_of_k3(self, k3):
        sub, index = induced_subgraph(k3, {1, 2})
        assert sub.n == 2 and sub.edges == ((1, 2),)
        assert index == {1: 1, 2: 2}

    def test_identity(self, k3):
        sub, index = induced_subgraph(k3, {1, 2, 3})
        assert sub == k3 and index == {1: 1, 2: 2, 3: 3}

    def test_path_ends(self, path3):
        sub, index = induced_subgraph(path3, {1, 3})
        assert sub.n == 2 and sub.edges == () and index == {1: 1, 3: 2}

    def test_empty_keep(self, k3):
        with pytest.raises(DomainError):
            induced_subgraph(k3, set())

    @given(topologies())
    def test_full_keep_is_identity(self, topo):
        sub, index = induced_subgraph(topo, topo.agents)
        assert sub == topo and all(k == v for k, v in index.items())

    @given(topologies(min_n=2), st.data())
    def test_keeps_exactly_inner_edges(self, topo, data):
        keep = data.draw(st.sets(st.sampled_from(list(topo.agents)), min_size=1))
        sub, index = induced_subgraph(topo, keep)
        expected = {(index[i], index[j]) for i, j in topo.edges if i in keep and j in keep}
        assert set(sub.edges) == expected and sub.n == len(keep)


class TestConnectivity:
    def test_examples(self, k3, path3):
        assert is_connected(k3) and is_connected(path3)
        assert not is_connected(Topology(2))
        assert is_connected(Topology(1))

    def test_vertex_cut_examples(self, k3, path3):
        assert not is_vertex_cut(k3, {3})
        assert is_vertex_cut(path3, {2})
        assert not is_vertex_cut(k3, set())

    def test_leaving_one_agent_is_not_a_cut(self, k3):
        assert not is_vertex_cut(k3, {1, 2})

    def test_cut_of_everything_rejected(self, k3):
        with pytest.raises(DomainError):
            is_vertex_cut(k3, {1, 2, 3})

    def test_vertex_connectivity_examples(self, k3, path3):
        assert vertex_connectivity(k3) == 2
        assert vertex_connectivity(path3) == 1
        assert vertex_connectivity(cycle_graph(4)) == 2
        assert vertex_connectivity(complete_graph(6)) == 5
        assert vertex_connectivity(Topology(3, [(1, 2)])) == 0

    @given(topologies())
    def test_connected_matches_components(self, topo):
        assert is_connected(topo) == (len(components(topo.n, topo.edges)) == 1)

    @given(topologies(min_n=2), st.data())
    def test_cut_matches_brute_force(self, topo, data):
        c = data.draw(st.sets(st.sampled_from(list(topo.agents)), max_size=topo.n - 1))
        assert is_vertex_cut(topo, c) == brute_is_cut(topo.n, topo.edges, c)

    @given(topologies())
    def test_connectivity_matches_brute_force(self, topo):
        assert vertex_connectivity(topo) == brute_connectivity(topo.n, topo.edges)

    def test_large_graph_connectivity_uses_python_masks(self):
        big = path_graph(70)
        assert is_connected(big)
        assert is_vertex_cut(big, {35})
        with pytest.raises(DomainError):
            vertex_connectivity(big)

    def test_random_graph_connected_flag(self):
        gen = np.random.default_rng(3)
        for _ in range(20):
            assert is_connected(random_graph(8, 0.2, gen, connected=True))
