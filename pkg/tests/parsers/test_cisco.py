"""Tests for the Cisco-style config parser, renderer, views and editors."""

from collections import Counter
from ipaddress import IPv4Network

import pytest

from netveil.errors import DuplicateHostname, MalformedLine, MissingHostname
from netveil.parsers import cisco
from netveil.parsers.cisco import parse_config, render_config
from netveil.parsers.schema import StanzaKind

PEER_GROUP_CONFIG = """\
hostname edge1
!
interface GigabitEthernet0/0
 ip address 17.56.7.9 255.255.255.252
!
interface GigabitEthernet0/1
 ip address 17.56.8.9 255.255.255.252
!
router bgp 65100
 neighbor ISP1 peer-group
 neighbor ISP1 remote-as 174
 neighbor ISP1 route-map ISP-IMP in
 neighbor 17.56.7.8 peer-group ISP1
 neighbor 17.56.8.8 peer-group ISP1
 network 192.0.2.0 mask 255.255.255.0
!
ip prefix-list IMP seq 5 permit 0.0.0.0/0 le 24
!
route-map ISP-IMP permit 10
 match ip address prefix-list IMP
!
end
"""


class TestParseConfig:
    def test_minimal_config(self):
        cfg = parse_config("hostname r1\ninterface eth0\n ip address 10.0.1.1 255.255.255.0")
        assert cfg.hostname == "r1"
        assert len(cfg.stanzas) == 2
        iface = cisco.interface(cfg, "eth0")
        assert iface.network == IPv4Network("10.0.1.0/24")

    def test_peer_group_members(self):
        cfg = parse_config(PEER_GROUP_CONFIG)
        speaker = cisco.bgp(cfg)
        assert speaker.asn == 65100
        assert set(speaker.peer_groups) == {"ISP1"}
        assert sorted(speaker.members("ISP1")) == ["17.56.7.8", "17.56.8.8"]
        resolved = speaker.resolve("17.56.7.8")
        assert resolved.remote_as == 174
        assert resolved.route_map_in == "ISP-IMP"
        assert speaker.networks == ["192.0.2.0/24"]

    def test_empty_text_has_no_hostname(self):
        with pytest.raises(MissingHostname):
            parse_config("")

    def test_second_hostname_rejected(self):
        with pytest.raises(DuplicateHostname):
            parse_config("hostname a\nhostname b\n")

    def test_bad_cost_reports_line(self):
        text = "hostname r1\ninterface eth0\n ip address 10.0.1.1 255.255.255.0\n ip ospf cost 0\n"
        with pytest.raises(MalformedLine) as excinfo:
            parse_config(text)
        assert excinfo.value.line_no == 4

    def test_undeclared_peer_group_rejected(self):
        text = "hostname r1\nrouter bgp 1\n neighbor 10.0.0.1 peer-group MISSING\n"
        with pytest.raises(MalformedLine):
            parse_config(text)

    def test_unknown_statements_kept_as_other(self):
        cfg = parse_config("hostname r1\nntp server 10.9.9.9\nline vty 0 4\n login\n")
        kinds = cfg.kind_sequence()
        assert kinds == [StanzaKind.HOSTNAME, StanzaKind.OTHER, StanzaKind.OTHER]
        assert cfg.stanzas[2].commands[0].raw == " login"

    def test_comments_attach_to_following_stanza(self):
        cfg = parse_config("hostname r1\n!\n! uplink\ninterface eth0\n ip address 10.0.1.1 255.255.255.0\n")
        assert cfg.stanzas[1].comments == ["!", "! uplink"]

    def test_numbered_acl_lines_grouped(self):
        text = "hostname r1\naccess-list 10 permit 10.1.0.0 0.0.255.255\naccess-list 10 deny any\naccess-list 20 permit any\n"
        cfg = parse_config(text)
        acls = cfg.stanzas_of(StanzaKind.ACCESS_LIST)
        assert [s.group for s in acls] == ["10", "20"]
        assert len(acls[0].lines()) == 2

    def test_keyword_paths_strip_parameters(self):
        cfg = parse_config("hostname r1\ninterface eth0\n ip address 10.0.1.1 255.255.255.0\n ip ospf cost 7\n")
        signatures = [c.signature for c in cfg.stanzas[1].commands]
        assert signatures == ["ip address <ip> <ip>", "ip ospf cost <num>"]


class TestRenderConfig:
    def test_fixture_round_trip(self, networks_dir):
        source = (networks_dir / "campus" / "configs" / "r1.cfg").read_text()
        once = render_config(parse_config(source))
        assert once == source
        assert render_config(parse_config(once)) == once

    def test_every_fixture_is_lossless(self, networks_dir):
        for path in sorted(networks_dir.glob("*/configs/*.cfg")):
            source = path.read_text()
            rendered = render_config(parse_config(source))
            assert Counter(source.split()) == Counter(rendered.split()), path

    def test_reordering_is_preserved(self):
        cfg = parse_config("hostname r1\ninterface a\n ip address 10.0.0.1 255.255.255.0\ninterface b\n ip address 10.0.1.1 255.255.255.0\n")
        cfg.stanzas[1], cfg.stanzas[2] = cfg.stanzas[2], cfg.stanzas[1]
        assert render_config(cfg).splitlines()[1] == "interface b"

    def test_added_distribute_list_is_the_only_diff(self, networks_dir):
        source = (networks_dir / "campus" / "configs" / "r2.cfg").read_text()
        cfg = parse_config(source)
        cisco.add_ospf_distribute_list(cfg, "DENY-X", "GigabitEthernet0/1")
        before, after = source.splitlines(), render_config(cfg).splitlines()
        added = [line for line in after if line not in before]
        assert added == [" distribute-list prefix DENY-X in GigabitEthernet0/1"]
        assert [line for line in after if line in before] == before


class TestViews:
    def test_ospf_enabled_interfaces(self, campus):
        cfg = campus.configs["r5"]
        names = [i.name for i in cisco.ospf_enabled_interfaces(cfg)]
        assert names == ["GigabitEthernet0/0", "GigabitEthernet0/1", "GigabitEthernet0/2"]
        assert cisco.interface(cfg, "GigabitEthernet0/1").ospf_cost == 5

    def test_protocols_and_router_id(self, twoas):
        cfg = twoas.configs["b1"]
        assert cisco.protocols(cfg) == {"ospf", "bgp"}
        assert cisco.router_id(cfg) == "10.255.2.1"

    def test_router_id_falls_back_to_highest_address(self, campus):
        assert cisco.router_id(campus.configs["r1"]) == "10.1.1.1"

    def test_prefix_list_policy(self, filtered):
        table = cisco.policies(filtered.configs["x"])
        assert not table.permits(IPv4Network("10.40.1.0/24"), prefix_list="BLOCK-H1")
        assert table.permits(IPv4Network("10.40.2.0/24"), prefix_list="BLOCK-H1")
        assert table.permits(IPv4Network("10.40.1.0/24"), prefix_list="UNDEFINED")

    def test_undefined_route_map_denies(self):
        table = cisco.policies(parse_config("hostname r1\nroute-map KEEP permit 10\n"))
        network = IPv4Network("10.9.0.0/24")
        assert table.permits(network, route_map="KEEP")
        assert not table.permits(network, route_map="MISSING")
        assert table.permits(network, acl="MISSING")

    def test_static_routes(self):
        cfg = parse_config("hostname r1\nip route 10.9.0.0 255.255.0.0 10.0.0.2\nip route 0.0.0.0 0.0.0.0 Null0 250\n")
        routes = cisco.static_routes(cfg)
        assert [(r.prefix, r.next_hop, r.distance) for r in routes] == [
            ("10.9.0.0/16", "10.0.0.2", 1),
            ("0.0.0.0/0", "Null0", 250),
        ]


class TestEditors:
    def test_add_interface_follows_style(self, campus):
        cfg = campus.configs["r4"].model_copy(deep=True)
        name = cisco.next_interface_name(cfg)
        assert name == "GigabitEthernet0/2"
        cisco.add_interface(cfg, name, "10.250.0.1", "255.255.255.252", cost=3, style=["ip address", "duplex auto"])
        iface = cisco.interface(cfg, name)
        assert iface.ip == "10.250.0.1"
        assert iface.ospf_cost == 3
        stanza = cisco.interface_stanza(cfg, name)
        assert [c.raw for c in stanza.commands][:2] == [" ip address 10.250.0.1 255.255.255.252", " duplex auto"]

    def test_set_interface_cost_replaces_line(self, campus):
        cfg = campus.configs["r5"].model_copy(deep=True)
        cisco.set_interface_cost(cfg, "GigabitEthernet0/1", 9)
        stanza = cisco.interface_stanza(cfg, "GigabitEthernet0/1")
        costs = [c.raw for c in stanza.commands if c.tokens[:3] == ["ip", "ospf", "cost"]]
        assert costs == [" ip ospf cost 9"]

    def test_set_interface_cost_unknown_interface(self, campus):
        with pytest.raises(KeyError):
            cisco.set_interface_cost(campus.configs["r5"], "Serial9/9", 2)

    def test_prefix_list_entries_stay_ordered(self, filtered):
        cfg = filtered.configs["x"].model_copy(deep=True)
        cisco.add_prefix_list_entry(cfg, "BLOCK-H1", 7, "deny", "10.40.3.0/24")
        entries = cisco.policies(cfg).prefix_lists["BLOCK-H1"].entries
        assert [e.seq for e in entries] == [5, 7, 10]
        assert not cisco.policies(cfg).permits(IPv4Network("10.40.3.0/24"), prefix_list="BLOCK-H1")

    def test_add_bgp_neighbor_groups_lines(self, twoas):
        cfg = twoas.configs["a2"].model_copy(deep=True)
        assert cisco.add_bgp_neighbor(cfg, "10.250.0.2", 65001, extra=["next-hop-self"])
        speaker = cisco.bgp(cfg)
        assert speaker.resolve("10.250.0.2").next_hop_self
        stanza = cfg.first(StanzaKind.ROUTER_BGP)
        neighbor_lines = [i for i, c in enumerate(stanza.commands) if c.tokens[0] == "neighbor"]
        assert neighbor_lines == list(range(neighbor_lines[0], neighbor_lines[0] + len(neighbor_lines)))

    def test_add_ospf_network_without_ospf(self, filtered):
        assert not cisco.add_ospf_network(filtered.configs["x"], IPv4Network("10.252.0.0/24"))
