"""Shared fixtures for netveil tests."""

from pathlib import Path

import networkx as nx
import pytest

from netveil.config import BUNDLED_REFERENCE_DIR
from netveil.snapshot import load_snapshot
from netveil.topology import Topology

NETWORKS_DIR = Path(__file__).parent / "fixtures" / "networks"


@pytest.fixture
def tmp_config(tmp_path, monkeypatch):
    """Monkeypatch CONFIG_FILE and CONFIG_DIR to tmp_path."""
    config_dir = tmp_path / ".netveil"
    config_file = config_dir / "config.json"
    monkeypatch.setattr("netveil.config.CONFIG_DIR", config_dir)
    monkeypatch.setattr("netveil.config.CONFIG_FILE", config_file)
    monkeypatch.delenv("NETVEIL_REFERENCE_DIR", raising=False)
    monkeypatch.delenv("NETVEIL_SOLVER_TIMEOUT_MS", raising=False)
    monkeypatch.delenv("NETVEIL_INTERAS_CAP", raising=False)
    return config_file


@pytest.fixture
def networks_dir():
    return NETWORKS_DIR


@pytest.fixture
def reference_dir():
    return BUNDLED_REFERENCE_DIR


@pytest.fixture
def load_network():
    """Load a bundled fixture snapshot by name."""
    def _load(name: str):
        return load_snapshot(NETWORKS_DIR / name)
    return _load


@pytest.fixture
def campus(load_network):
    return load_network("campus")


@pytest.fixture
def square(load_network):
    return load_network("square")


@pytest.fixture
def twoas(load_network):
    return load_network("twoas")


@pytest.fixture
def filtered(load_network):
    return load_network("filtered")


def _make_topology(edges, name="g"):
    return Topology.from_edges(edges, name=name)


def _random_topology(rng, n, p, name="random"):
    while True:
        seed = int(rng.integers(2**31))
        graph = nx.gnp_random_graph(n, p, seed=seed)
        if nx.is_connected(graph):
            break
    graph = nx.relabel_nodes(graph, {i: f"r{i}" for i in graph.nodes})
    return Topology.from_graph(graph, name=name)


@pytest.fixture
def make_topology():
    """Router-only topology from (u, v) pairs."""
    return _make_topology


@pytest.fixture
def random_topology():
    """Connected G(n, p) router graph with nodes r0..r{n-1}, drawn from ``rng``."""
    return _random_topology


@pytest.fixture
def square_topology():
    return _make_topology([("r1", "r2"), ("r1", "r3"), ("r2", "r4"), ("r3", "r4")], name="square")


@pytest.fixture
def star_topology():
    return _make_topology([("hub", "a"), ("hub", "b"), ("hub", "c"), ("a", "b")], name="star")
