"""Tests for netveil.sampling: strategy registry, subgraph sampling and the comparison report."""

import networkx as nx
import numpy as np
import pytest

from netveil.errors import UnreachableTarget
from netveil.sampling import (
    TRAVERSAL_FAMILY,
    WALK_FAMILY,
    SamplerRegistry,
    SamplingKind,
    SamplingStrategy,
    sample_subgraph,
    sampling_report,
)
from netveil.topology import Topology, load_graphml, load_library


@pytest.fixture
def backbone(reference_dir):
    return load_graphml(reference_dir / "research44.graphml")


class TestRegistry:
    def test_all_kinds_registered(self):
        assert set(SamplerRegistry.list_kinds()) == set(SamplingKind)

    def test_families_partition_kinds(self):
        assert set(TRAVERSAL_FAMILY) | set(WALK_FAMILY) == set(SamplingKind)
        assert not set(TRAVERSAL_FAMILY) & set(WALK_FAMILY)

    def test_unknown_kind(self):
        with pytest.raises(KeyError):
            SamplerRegistry.get("nope")

    def test_params_recorded_per_kind(self):
        assert SamplingStrategy(kind=SamplingKind.FFS).params() == {"fire_probability": 0.7}
        assert "alpha" in SamplingStrategy(kind=SamplingKind.RCMH).params()
        assert SamplingStrategy(kind=SamplingKind.BFS).params() == {}


class TestSampleSubgraph:
    @pytest.mark.parametrize("kind", list(SamplingKind))
    def test_sample_size_and_membership(self, backbone, kind):
        sample = sample_subgraph(backbone, 15, SamplingStrategy(kind=kind, seed=3))
        assert len(sample) == 15
        assert set(sample.graph.nodes) <= set(backbone.graph.nodes)
        for u, v in sample.graph.edges:
            assert backbone.graph.has_edge(u, v)

    @pytest.mark.parametrize("kind", list(SamplingKind))
    def test_seed_determines_sample(self, backbone, kind):
        a = sample_subgraph(backbone, 12, SamplingStrategy(kind=kind, seed=99))
        b = sample_subgraph(backbone, 12, SamplingStrategy(kind=kind, seed=99))
        assert sorted(a.graph.nodes) == sorted(b.graph.nodes)

    def test_traversals_stay_connected(self, backbone):
        for kind in (SamplingKind.BFS, SamplingKind.DFS, SamplingKind.RW):
            sample = sample_subgraph(backbone, 10, SamplingStrategy(kind=kind, seed=5))
            assert nx.is_connected(sample.graph)

    def test_full_size_returns_whole_graph(self, backbone):
        sample = sample_subgraph(backbone, len(backbone), SamplingStrategy())
        assert sorted(sample.graph.edges) == sorted(backbone.router_graph().edges)

    def test_size_out_of_range(self, backbone):
        with pytest.raises(ValueError):
            sample_subgraph(backbone, 0, SamplingStrategy())
        with pytest.raises(ValueError):
            sample_subgraph(backbone, len(backbone) + 1, SamplingStrategy())

    def test_walk_cannot_leave_component(self):
        graph = nx.Graph([("a", "b"), ("c", "d"), ("d", "e")])
        ref = Topology.from_graph(graph, name="split")
        with pytest.raises(UnreachableTarget):
            sample_subgraph(ref, 4, SamplingStrategy(kind=SamplingKind.RW, seed=1))


class TestSamplingReport:
    def test_report_shape(self, reference_dir):
        library = [load_graphml(reference_dir / "backbone10.graphml"), load_graphml(reference_dir / "metro18.graphml")]
        report = sampling_report(library, rate=0.5, trials=3, seed=4)
        assert report.graphs == 2
        assert {s.kind for s in report.strategies} == set(SamplingKind)
        for summary in report.strategies:
            assert 0.0 <= summary.mean_ks <= 1.0
            assert summary.samples <= 6
        assert 0.0 <= report.traversal_mean <= 1.0
        assert 0.0 <= report.walk_mean <= 1.0

    def test_report_is_reproducible(self, reference_dir):
        library = [load_graphml(reference_dir / "regional12.graphml")]
        first = sampling_report(library, rate=0.75, trials=4, seed=8)
        second = sampling_report(library, rate=0.75, trials=4, seed=8)
        assert first.model_dump() == second.model_dump()

    def test_full_rate_gives_zero_distance(self, reference_dir):
        library = [load_graphml(reference_dir / "backbone08.graphml")]
        report = sampling_report(library, rate=1.0, trials=2, seed=0)
        assert all(np.isclose(s.mean_ks, 0.0) for s in report.strategies)

    def test_random_walk_beats_bfs_over_corpus(self, reference_dir):
        report = sampling_report(load_library(reference_dir), rate=0.75, trials=50, seed=0)
        mean = {s.kind: s.mean_ks for s in report.strategies}
        assert report.graphs >= 10
        assert mean[SamplingKind.RW] < mean[SamplingKind.BFS]

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            sampling_report([], rate=0.0, trials=1, seed=0)
