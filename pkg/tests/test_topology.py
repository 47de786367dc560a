"""Tests for netveil.topology: extraction, degree sequences and K-S distance."""

import numpy as np
import pytest

from netveil.errors import AmbiguousSubnet, EmptySequence, OrphanHost
from netveil.expansion import expand_replica
from netveil.parsers.cisco import parse_config
from netveil.parsers.schema import HostSpec
from netveil.snapshot import NetworkSnapshot
from netveil.topology import (
    DegreeSequence,
    Topology,
    degree_sequence,
    extract_topology,
    ks_distance,
    load_graphml,
    load_library,
    rationality,
)


def ecdf_ks(a, b):
    """Brute-force two-sample K-S statistic over the joint support."""
    support = sorted(set(a) | set(b))
    return max(
        abs(sum(1 for x in a if x <= t) / len(a) - sum(1 for x in b if x <= t) / len(b))
        for t in support
    )


def _snapshot(*texts, hosts=()):
    snapshot = NetworkSnapshot()
    for text in texts:
        snapshot.add_config(parse_config(text))
    for host in hosts:
        snapshot.hosts[host.hostname] = host
    return snapshot


class TestExtractTopology:
    def test_campus_edges(self, campus):
        topo = extract_topology(campus)
        assert topo.routers == ["r1", "r2", "r3", "r4", "r5"]
        expected = {frozenset(e) for e in [("r1", "r2"), ("r1", "r3"), ("r1", "r4"), ("r2", "r3"), ("r4", "r5"), ("r2", "r5")]}
        assert topo.router_edges() == expected
        assert topo.hosts == ["h1", "h3", "h5"]
        assert topo.gateway("h5") == "r5"

    def test_link_attributes(self, campus):
        link = extract_topology(campus).link("r2", "r5")
        assert link["subnet"] == "10.0.25.0/30"
        assert link["ifaces"] == {"r2": "GigabitEthernet0/2", "r5": "GigabitEthernet0/1"}
        assert link["ips"]["r5"] == "10.0.25.2"

    def test_single_router_with_host(self):
        snapshot = _snapshot(
            "hostname r1\ninterface eth0\n ip address 10.0.1.1 255.255.255.0\n",
            hosts=[HostSpec(hostname="h1", iface_ip="10.0.1.100", mask="255.255.255.0", gateway_router="r1", gateway_ip="10.0.1.1")],
        )
        topo = extract_topology(snapshot)
        assert sorted(topo.graph.nodes) == ["h1", "r1"]
        assert topo.graph.number_of_edges() == 1

    def test_disjoint_subnets_give_isolated_routers(self):
        snapshot = _snapshot(
            "hostname r1\ninterface eth0\n ip address 10.0.1.1 255.255.255.0\n",
            "hostname r2\ninterface eth0\n ip address 10.0.2.1 255.255.255.0\n",
        )
        topo = extract_topology(snapshot)
        assert topo.routers == ["r1", "r2"]
        assert topo.router_edges() == set()

    def test_shared_subnet_of_three_routers(self):
        texts = [f"hostname r{i}\ninterface eth0\n ip address 10.0.0.{i} 255.255.255.0\n" for i in (1, 2, 3)]
        with pytest.raises(AmbiguousSubnet):
            extract_topology(_snapshot(*texts))

    def test_orphan_host(self):
        snapshot = _snapshot(
            "hostname r1\ninterface eth0\n ip address 10.0.1.1 255.255.255.0\n",
            hosts=[HostSpec(hostname="h1", iface_ip="10.0.9.100", mask="255.255.255.0", gateway_router="r1", gateway_ip="10.0.9.1")],
        )
        with pytest.raises(OrphanHost):
            extract_topology(snapshot)

    def test_as_membership(self, twoas, campus):
        topo = extract_topology(twoas)
        assert topo.as_members(65001) == ["a1", "a2"]
        assert topo.as_members(65002) == ["b1", "b2"]
        assert set(extract_topology(campus).as_of.values()) == {0}


class TestDegreeSequence:
    def test_star(self, make_topology):
        star = make_topology([("c", "a"), ("c", "b"), ("c", "d")])
        assert degree_sequence(star).sorted_desc == [3, 1, 1, 1]

    def test_campus(self, campus):
        assert degree_sequence(extract_topology(campus)).sorted_desc == [3, 3, 2, 2, 2]

    def test_hosts_excluded_by_default(self, campus):
        topo = extract_topology(campus)
        assert len(degree_sequence(topo)) == 5
        assert len(degree_sequence(topo, routers_only=False)) == 8

    def test_empty(self):
        assert degree_sequence(Topology()).values == []


class TestKsDistance:
    def test_identical(self):
        seq = DegreeSequence(values=[1, 2, 3, 3])
        assert ks_distance(seq, seq) == 0.0

    def test_hand_computed(self):
        assert ks_distance(DegreeSequence(values=[1, 1, 2, 2]), DegreeSequence(values=[1, 2, 2, 3])) == pytest.approx(0.25)

    def test_disjoint_supports(self):
        assert ks_distance(DegreeSequence(values=[1]), DegreeSequence(values=[5])) == 1.0

    def test_empty_sequence(self):
        with pytest.raises(EmptySequence):
            ks_distance(DegreeSequence(values=[]), DegreeSequence(values=[1]))

    def test_matches_ecdf_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            a = rng.integers(1, 8, size=int(rng.integers(1, 15))).tolist()
            b = rng.integers(1, 8, size=int(rng.integers(1, 15))).tolist()
            got = ks_distance(DegreeSequence(values=a), DegreeSequence(values=b))
            assert abs(got - ecdf_ks(a, b)) <= 1e-12


class TestRationality:
    def test_self(self, campus):
        topo = extract_topology(campus)
        score = rationality(topo, topo)
        assert score.ks_distance == 0.0

    def test_replica_differs_from_original(self, campus):
        topo = extract_topology(campus)
        replica = expand_replica(topo, 2)
        expected = ecdf_ks(degree_sequence(replica).values, degree_sequence(topo).values)
        score = rationality(replica, topo)
        assert score.ks_distance > 0
        assert score.ks_distance == pytest.approx(expected)


class TestGraphml:
    def test_load_bundled_library(self, reference_dir):
        library = load_library(reference_dir)
        assert len(library) >= 10
        assert all(len(t) > 0 and not t.hosts for t in library)

    def test_name_from_file(self, reference_dir):
        topo = load_graphml(reference_dir / "backbone08.graphml")
        assert topo.name == "backbone08"
        assert len(topo) == 8

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_library(tmp_path / "nope")
