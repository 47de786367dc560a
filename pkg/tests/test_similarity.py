"""Tests for netveil.similarity: config similarity axes, skeleton baseline and path anonymity."""

import pytest
from pydantic import ValidationError

from netveil.parsers import cisco
from netveil.parsers.cisco import parse_config
from netveil.similarity import (
    SimilarityReport,
    mean_similarity,
    order_similarity,
    path_anonymity,
    similarity,
    skeleton_config,
    stanza_similarity,
)
from netveil.simulator import DataPlane, dataplane

IFACE_FIRST = "hostname a\ninterface e0\n ip address 10.0.0.1 255.255.255.0\nrouter ospf 1\n network 10.0.0.0 0.0.0.255 area 0\nntp server 10.9.9.9\n"
OSPF_FIRST = "hostname b\nrouter ospf 1\n network 10.0.0.0 0.0.0.255 area 0\ninterface e0\n ip address 10.0.0.2 255.255.255.0\nntp server 10.9.9.9\n"


class TestSimilarity:
    def test_self_similarity_is_one(self, campus):
        cfg = campus.configs["r2"]
        report = similarity(cfg, [cfg])
        assert report.overall == pytest.approx(1.0)
        assert report.closest == "r2"

    def test_best_real_wins(self, campus, twoas):
        report = similarity(campus.configs["r3"], [twoas.configs["b1"], campus.configs["r1"]])
        assert report.closest == "r1"

    def test_skeleton_scores_lower(self, campus, twoas):
        for snapshot in (campus, twoas):
            reals = list(snapshot.configs.values())
            for cfg in reals:
                skeleton = similarity(skeleton_config(cfg), reals)
                assert skeleton.overall < similarity(cfg, reals).overall

    def test_no_reals(self, campus):
        report = similarity(campus.configs["r1"], [])
        assert report.overall == 0.0
        assert report.closest is None

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            SimilarityReport(sim_stanza=1.0, sim_cmd=1.0, sim_order=1.0, w_stanza=0.5, w_cmd=0.5, w_order=0.5)


class TestAxes:
    def test_order_swap(self):
        a, b = parse_config(IFACE_FIRST), parse_config(OSPF_FIRST)
        assert order_similarity(a, b) == pytest.approx(2 / 3)
        assert order_similarity(a, a) == 1.0

    def test_stanza_counts_ignore_order(self):
        assert stanza_similarity(parse_config(IFACE_FIRST), parse_config(OSPF_FIRST)) == pytest.approx(1.0)

    def test_mean(self):
        reports = [
            SimilarityReport(sim_stanza=1.0, sim_cmd=0.5, sim_order=0.0),
            SimilarityReport(sim_stanza=0.0, sim_cmd=0.5, sim_order=1.0),
        ]
        mean = mean_similarity(reports)
        assert (mean.sim_stanza, mean.sim_cmd, mean.sim_order) == (0.5, 0.5, 0.5)
        assert mean.overall == pytest.approx(0.5)
        assert mean_similarity([]) is None


class TestSkeleton:
    def test_peer_groups_expanded(self, twoas):
        skeleton = skeleton_config(twoas.configs["b1"])
        speaker = cisco.bgp(skeleton)
        assert speaker.peer_groups == {}
        assert speaker.resolve("10.2.12.2").remote_as == 65002
        assert cisco.policies(skeleton).prefix_lists == {}

    def test_keeps_addresses_and_costs(self, campus):
        skeleton = skeleton_config(campus.configs["r5"])
        assert cisco.interface(skeleton, "GigabitEthernet0/1").ospf_cost == 5
        assert len(cisco.ospf_enabled_interfaces(skeleton)) == 3


class TestPathAnonymity:
    @pytest.fixture
    def dp(self):
        return DataPlane(paths={
            ("h1", "h2"): [("h1", "a", "b", "d", "h2"), ("h1", "a", "c", "d", "h2")],
            ("h2", "h1"): [("h2", "d", "b", "a", "h1")],
            ("h1", "h3"): [("h1", "a", "h3")],
        })

    def test_mean_over_pairs(self, dp):
        result = path_anonymity(dp)
        assert result.pairs == 2
        assert result.n_r == pytest.approx(1.5)

    def test_egress_filter(self, dp):
        assert path_anonymity(dp, egress={"a"}).n_r == 0.0
        assert path_anonymity(dp, egress={"a", "d"}).pairs == 2

    def test_counts_grow_with_ecmp(self, campus):
        assert path_anonymity(dataplane(campus)).n_r > 1.0
