"""Tests for netveil.expansion: replica, reference selection, embedding and sample-connect."""

import networkx as nx
import numpy as np
import pytest

from netveil.errors import IncompleteMatching, InvalidK, NoFeasibleReference
from netveil.expansion import (
    EmbeddingState,
    bridge_components,
    bridge_count,
    edge_completion,
    edge_rearrangement,
    embed_graph_greedy,
    expand_replica,
    expand_sample_connect,
    fake_names,
    layer_copies,
    node_mapping,
    select_reference,
)
from netveil.sampling import SamplingKind, SamplingStrategy
from netveil.topology import degree_sequence, extract_topology, load_graphml, load_library


@pytest.fixture
def campus_topology(campus):
    return extract_topology(campus)


@pytest.fixture
def library(reference_dir):
    return load_library(reference_dir)


def assert_layer_swaps_are_automorphisms(replica, k):
    layers = [layer_copies(replica, i) for i in range(k)]
    edges = replica.router_edges()
    for a in range(k):
        for b in range(a + 1, k):
            swap = {}
            for real in layers[0]:
                swap[layers[a][real]] = layers[b][real]
                swap[layers[b][real]] = layers[a][real]
            swapped = {frozenset(swap.get(n, n) for n in e) for e in edges}
            assert swapped == edges, (a, b)


class TestFakeNames:
    def test_continues_numbering(self):
        assert fake_names(["r1", "r2", "r10"], 2) == ["r11", "r12"]

    def test_most_common_prefix_wins(self):
        assert fake_names(["core1", "edge1", "edge2"], 1) == ["edge3"]

    def test_default_prefix(self):
        assert fake_names(["alpha", "beta"], 2) == ["r1", "r2"]

    def test_avoid_skips_names(self):
        assert fake_names(["r1"], 2, avoid=["r2"]) == ["r3", "r4"]


class TestReplica:
    def test_degrees_scale_with_k(self, campus_topology):
        replica = expand_replica(campus_topology, 2)
        assert len(replica) == 10
        copies = layer_copies(replica, 1)
        for v in campus_topology.routers:
            assert replica.degree(v) == 2 * campus_topology.degree(v)
            assert replica.degree(copies[v]) == 2 * campus_topology.degree(v)

    def test_original_graph_is_subgraph(self, campus_topology):
        replica = expand_replica(campus_topology, 3)
        assert campus_topology.router_edges() <= replica.router_edges()
        assert replica.graph.nodes["r11"]["replica_of"] == "r1"
        assert replica.graph.nodes["r11"]["replica_layer"] == 2

    def test_copies_continue_naming_pattern(self, campus_topology):
        replica = expand_replica(campus_topology, 2)
        real = campus_topology.routers
        fakes = sorted(set(replica.routers) - set(real))
        assert fakes == ["r10", "r6", "r7", "r8", "r9"]
        assert layer_copies(replica, 1) == {"r1": "r6", "r2": "r7", "r3": "r8", "r4": "r9", "r5": "r10"}
        assert not any(f.startswith(f"{v}_") for f in fakes for v in real)

    def test_copy_names_skip_hosts(self, make_topology):
        topo = make_topology([("r1", "r2")])
        topo.add_host("r3", "r1")
        replica = expand_replica(topo, 2)
        assert set(layer_copies(replica, 1).values()) == {"r4", "r5"}

    def test_hosts_stay_on_real_gateways(self, campus_topology):
        replica = expand_replica(campus_topology, 2)
        assert replica.hosts == campus_topology.hosts
        assert replica.gateway("h5") == "r5"

    def test_layers_are_interchangeable(self, campus_topology):
        replica = expand_replica(campus_topology, 2)
        assert_layer_swaps_are_automorphisms(replica, 2)

    @pytest.mark.parametrize("k", [2, 3])
    def test_random_graph_layer_swaps(self, random_topology, k):
        rng = np.random.default_rng(40 + k)
        for _ in range(10):
            topo = random_topology(rng, int(rng.integers(3, 13)), 0.4)
            replica = expand_replica(topo, k)
            assert len(replica.routers) == k * len(topo.routers)
            assert topo.router_edges() <= replica.router_edges()
            assert_layer_swaps_are_automorphisms(replica, k)

    def test_k_below_two(self, campus_topology):
        with pytest.raises(InvalidK):
            expand_replica(campus_topology, 1)


class TestNodeMapping:
    def test_degree_feasible(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        mapping = node_mapping(campus_topology, ref)
        assert set(mapping.map) == set(campus_topology.routers)
        assert len(set(mapping.map.values())) == 5
        for u, v in mapping.map.items():
            assert campus_topology.degree(u) <= ref.degree(v)

    def test_inverse(self, campus_topology, reference_dir):
        mapping = node_mapping(campus_topology, load_graphml(reference_dir / "backbone10.graphml"))
        assert mapping.inverse()[mapping.image("r1")] == "r1"

    def test_infeasible(self, make_topology):
        hub = make_topology([("c", "a"), ("c", "b"), ("c", "d")])
        path = make_topology([("x1", "x2"), ("x2", "x3"), ("x3", "x4"), ("x4", "x5")])
        with pytest.raises(IncompleteMatching):
            node_mapping(hub, path)


class TestSelectReference:
    def test_size_tie_prefers_larger(self, library):
        assert select_reference(library, 9).name == "backbone10"

    def test_feasibility_against_original(self, library, campus_topology):
        ref = select_reference(library, 10, campus_topology)
        assert ref.name == "backbone10"

    def test_nothing_fits(self, library):
        with pytest.raises(NoFeasibleReference):
            select_reference(library, 1000)


class TestEmbeddingSteps:
    def test_completion_builds_triangle(self):
        graph = nx.Graph()
        graph.add_nodes_from("abc")
        state = EmbeddingState(graph, {"a": 2, "b": 2, "c": 2}, set())
        assert edge_completion(state) == 3
        assert state.under_target() == []

    def test_rearrangement_swaps_unprotected_edge(self):
        graph = nx.Graph([("x", "y")])
        graph.add_nodes_from(["u", "v"])
        state = EmbeddingState(graph, {n: 1 for n in "uvxy"}, set())
        assert edge_rearrangement(state) == 1
        assert {frozenset(e) for e in graph.edges} == {frozenset("ux"), frozenset("vy")}

    def test_rearrangement_keeps_protected_edge(self):
        graph = nx.Graph([("x", "y")])
        graph.add_nodes_from(["u", "v"])
        state = EmbeddingState(graph, {n: 1 for n in "uvxy"}, {frozenset("xy")})
        assert edge_rearrangement(state) == 0
        assert graph.has_edge("x", "y")


class TestEmbedGraphGreedy:
    def test_original_edges_preserved(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        embedded, mapping = embed_graph_greedy(campus_topology, ref)
        assert len(embedded) == len(ref)
        assert campus_topology.router_edges() <= embedded.router_edges()
        assert set(mapping.map) == set(campus_topology.routers)
        assert embedded.hosts == campus_topology.hosts

    def test_fake_routers_named_and_tagged(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        embedded, _ = embed_graph_greedy(campus_topology, ref)
        fakes = sorted(set(embedded.routers) - set(campus_topology.routers))
        assert fakes == ["r10", "r6", "r7", "r8", "r9"]
        assert all(embedded.graph.nodes[f]["ref"] in ref.routers for f in fakes)

    def test_degrees_track_reference(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        embedded, _ = embed_graph_greedy(campus_topology, ref)
        assert sum(degree_sequence(embedded).values) > sum(degree_sequence(campus_topology).values)

    def test_router_graph_connected(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        embedded, _ = embed_graph_greedy(campus_topology, ref)
        assert nx.is_connected(embedded.router_graph())

    def test_identity_embedding_adds_nothing(self, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        embedded, _ = embed_graph_greedy(ref, ref)
        assert embedded.router_edges() == ref.router_edges()


class TestBridgeComponents:
    def test_fake_island_joined_to_lowest_degree_real(self):
        graph = nx.Graph([("r1", "r2"), ("r2", "r3"), ("f1", "f2"), ("f2", "f3")])
        assert bridge_components(graph, {"r1", "r2", "r3"}) == 1
        assert graph.has_edge("f1", "r1")
        assert nx.is_connected(graph)

    def test_connected_graph_untouched(self):
        graph = nx.Graph([("r1", "f1"), ("f1", "f2")])
        assert bridge_components(graph, {"r1"}) == 0
        assert graph.number_of_edges() == 2

    def test_no_real_routers(self):
        graph = nx.Graph([("f1", "f2")])
        graph.add_node("f3")
        assert bridge_components(graph, set()) == 0


class TestSampleConnect:
    def test_bridges_join_sample(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        out = expand_sample_connect(campus_topology, ref, 3, SamplingStrategy(kind=SamplingKind.BFS, seed=1), seed=2)
        real = set(campus_topology.routers)
        fakes = set(out.routers) - real
        assert fakes == {"r6", "r7", "r8"}
        assert campus_topology.router_edges() <= out.router_edges()
        bridges = [e for e in out.router_edges() if len(e & real) == 1]
        assert len(bridges) == bridge_count(3)

    def test_deterministic(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "metro18.graphml")
        strat = SamplingStrategy(kind=SamplingKind.RW, seed=5)
        a = expand_sample_connect(campus_topology, ref, 6, strat, seed=9)
        b = expand_sample_connect(campus_topology, ref, 6, strat, seed=9)
        assert a.router_edges() == b.router_edges()

    def test_zero_additions_rejected(self, campus_topology, reference_dir):
        ref = load_graphml(reference_dir / "backbone10.graphml")
        with pytest.raises(ValueError):
            expand_sample_connect(campus_topology, ref, 0, SamplingStrategy(), seed=0)

    def test_bridge_count(self):
        assert [bridge_count(n) for n in (1, 4, 5, 9)] == [1, 1, 2, 3]
