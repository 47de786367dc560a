"""Tests for netveil.anonymization: k-DMA checks, greedy and MaxSMT enforcement, k-DA baseline."""

from collections import Counter
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from netveil.anonymization import (
    AnonymityParams,
    KdmaLevel,
    anonymized_sequence,
    check_kdma,
    kda_baseline,
    kdma_greedy,
    kdma_maxsmt,
    needed_number,
)
from netveil.errors import Infeasible, Unsatisfiable
from netveil.expansion import NodeMapping, embed_graph_greedy, expand_replica, layer_copies, node_mapping
from netveil.topology import extract_topology, load_graphml


@pytest.fixture
def campus_topology(campus):
    return extract_topology(campus)


@pytest.fixture
def backbone10(reference_dir):
    return load_graphml(reference_dir / "backbone10.graphml")


class TestCheckKdma:
    def test_needed_number(self):
        assert needed_number(3, 4, KdmaLevel.WEAK) == 3
        assert needed_number(3, 4, KdmaLevel.STRONG) == 7

    def test_original_is_weak_but_not_strong(self, campus_topology):
        assert check_kdma(campus_topology, campus_topology, 2, KdmaLevel.WEAK)
        assert not check_kdma(campus_topology, campus_topology, 2, KdmaLevel.STRONG)

    def test_k_one_strong_always_holds_on_original(self, campus_topology):
        assert check_kdma(campus_topology, campus_topology, 1, "strong")

    def test_strong_implies_weak(self, campus_topology, backbone10):
        embedded, _ = embed_graph_greedy(campus_topology, backbone10)
        anon = kdma_greedy(campus_topology, embedded, AnonymityParams(k_R=2))
        assert check_kdma(campus_topology, anon, 2, KdmaLevel.STRONG)
        assert check_kdma(campus_topology, anon, 2, KdmaLevel.WEAK)


class TestKdmaGreedy:
    @pytest.mark.parametrize("level", list(KdmaLevel))
    def test_result_satisfies_level(self, campus_topology, backbone10, level):
        embedded, _ = embed_graph_greedy(campus_topology, backbone10)
        params = AnonymityParams(k_R=3, kdma_level=level)
        anon = kdma_greedy(campus_topology, embedded, params, seed=4)
        assert check_kdma(campus_topology, anon, 3, level)
        assert embedded.router_edges() <= anon.router_edges()
        assert set(anon.routers) == set(embedded.routers)

    def test_same_seed_same_edges(self, campus_topology, backbone10):
        embedded, _ = embed_graph_greedy(campus_topology, backbone10)
        params = AnonymityParams(k_R=4)
        a = kdma_greedy(campus_topology, embedded, params, seed=11)
        b = kdma_greedy(campus_topology, embedded, params, seed=11)
        assert a.router_edges() == b.router_edges()

    def test_prefers_fake_endpoints(self, make_topology):
        g = make_topology([("r1", "r2"), ("r2", "r3")])
        emb = make_topology([("r1", "r2"), ("r2", "r3")])
        emb.add_router("f1")
        emb.add_router("f2")
        anon = kdma_greedy(g, emb, AnonymityParams(k_R=2, kdma_level=KdmaLevel.WEAK), seed=0)
        added = anon.router_edges() - g.router_edges()
        assert added
        assert all(e & {"f1", "f2"} for e in added)

    def test_too_small_graph(self, campus_topology):
        with pytest.raises(Infeasible):
            kdma_greedy(campus_topology, campus_topology, AnonymityParams(k_R=2, kdma_level=KdmaLevel.STRONG))


class TestKdmaMaxSmt:
    def test_satisfies_strong_kdma(self, campus_topology, backbone10):
        mapping = node_mapping(campus_topology, backbone10)
        anon, objective = kdma_maxsmt(campus_topology, backbone10, mapping, k=2, timeout_ms=60000)
        assert check_kdma(campus_topology, anon, 2, KdmaLevel.STRONG)
        assert campus_topology.router_edges() <= anon.router_edges()
        assert len(anon) == len(backbone10)
        assert objective >= 0

    def test_reference_onto_itself_has_zero_gap(self, backbone10):
        mapping = NodeMapping.identity(backbone10.routers)
        anon, objective = kdma_maxsmt(backbone10, backbone10, mapping, k=1, timeout_ms=60000)
        assert objective == 0
        assert anon.router_edges() == backbone10.router_edges()

    def test_counting_exceeds_nodes(self, campus_topology, backbone10):
        mapping = node_mapping(campus_topology, backbone10)
        with pytest.raises(Unsatisfiable):
            kdma_maxsmt(campus_topology, backbone10, mapping, k=10, timeout_ms=60000)

    def test_extending_replica_keeps_copy_names(self, campus_topology):
        replica = expand_replica(campus_topology, 2)
        mapping = NodeMapping.identity(campus_topology.routers)
        anon, _ = kdma_maxsmt(campus_topology, replica, mapping, k=2, timeout_ms=60000, extends=True)
        assert set(anon.routers) == set(replica.routers)
        assert layer_copies(anon, 1) == layer_copies(replica, 1)
        assert all("ref" not in anon.graph.nodes[n] for n in anon.routers)
        assert check_kdma(campus_topology, anon, 2, KdmaLevel.STRONG)


class TestKdaBaseline:
    def test_hand_computed_sequence(self):
        assert anonymized_sequence([5, 3, 2, 2, 1], 2) == [5, 5, 2, 2, 2]
        assert anonymized_sequence([3, 3, 2, 2, 2], 2) == [3, 3, 2, 2, 2]
        assert anonymized_sequence([4, 1, 1], 2) == [4, 4, 4]
        assert anonymized_sequence([], 3) == []

    def test_every_degree_repeats_k_times(self, random_topology):
        rng = np.random.default_rng(21)
        for _ in range(5):
            g = random_topology(rng, 12, 0.25)
            anon = kda_baseline(g, 3, seed=1)
            counts = Counter(anon.degree(r) for r in anon.routers)
            assert min(counts.values()) >= 3
            assert g.router_edges() <= anon.router_edges()

    def test_k_one_is_identity(self, campus_topology):
        assert kda_baseline(campus_topology, 1).router_edges() == campus_topology.router_edges()

    def test_k_exceeds_routers(self, campus_topology):
        with pytest.raises(Infeasible):
            kda_baseline(campus_topology, 6)


def survives_identification(g, anon, k):
    """Every way of exposing k-1 anonymized routers still leaves a degree-feasible placement of g."""
    real = [("real", r) for r in g.routers]
    for exposed in combinations(anon.routers, k - 1):
        pool = [("anon", a) for a in anon.routers if a not in exposed]
        graph = nx.Graph()
        graph.add_nodes_from(real)
        graph.add_nodes_from(pool)
        graph.add_edges_from(
            (u, v) for u in real for v in pool if anon.degree(v[1]) >= g.degree(u[1])
        )
        matching = nx.bipartite.maximum_matching(graph, top_nodes=real)
        if any(u not in matching for u in real):
            return False
    return True


def every_router_has_k_candidates(g, anon, k):
    return all(sum(1 for a in anon.routers if anon.degree(a) >= g.degree(r)) >= k for r in g.routers)


def random_supergraph(rng, g, fakes, p):
    out = g.copy()
    for i in range(fakes):
        out.add_router(f"f{i}")
    nodes = out.routers
    for i, u in enumerate(nodes):
        for v in nodes[i + 1:]:
            if not out.has_edge(u, v) and rng.random() < p:
                out.add_edge(u, v)
    return out


class TestKdmaOracle:
    @pytest.mark.parametrize("k", [2, 3])
    def test_check_agrees_with_brute_force(self, random_topology, k):
        rng = np.random.default_rng(100 + k)
        outcomes = set()
        for _ in range(30):
            g = random_topology(rng, int(rng.integers(3, 7)), 0.5)
            anon = random_supergraph(rng, g, int(rng.integers(0, 6)), float(rng.uniform(0.0, 0.5)))
            strong = survives_identification(g, anon, k)
            weak = every_router_has_k_candidates(g, anon, k)
            assert check_kdma(g, anon, k, KdmaLevel.STRONG) == strong
            assert check_kdma(g, anon, k, KdmaLevel.WEAK) == weak
            outcomes.add(strong)
        assert outcomes == {True, False}

    @pytest.mark.parametrize("level", list(KdmaLevel))
    @pytest.mark.parametrize("k", [2, 3])
    def test_greedy_on_random_graphs(self, random_topology, level, k):
        rng = np.random.default_rng(200 + k)
        for trial in range(10):
            g = random_topology(rng, int(rng.integers(3, 8)), 0.4)
            emb = random_supergraph(rng, g, len(g.routers), 0.0)
            anon = kdma_greedy(g, emb, AnonymityParams(k_R=k, kdma_level=level), seed=trial)
            assert g.router_edges() <= anon.router_edges()
            if level == KdmaLevel.STRONG:
                assert survives_identification(g, anon, k)
            assert every_router_has_k_candidates(g, anon, k)
