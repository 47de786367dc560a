"""Configuration similarity and path anonymity metrics.

similarity() compares a config with real configs on three axes: stanza-kind
frequencies (cosine), parameter-stripped command sets of aligned stanzas
(Jaccard) and the order of stanza kinds (Kendall tau mapped to [0, 1]).
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from ipaddress import IPv4Network

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.stats import kendalltau

from .config import SIMILARITY_WEIGHTS
from .parsers import cisco
from .parsers.schema import RouterConfig, Stanza, StanzaKind
from .parsers.utils import prefixlen_to_wildcard
from .simulator import DataPlane

logger = logging.getLogger(__name__)


class SimilarityReport(BaseModel):
    sim_stanza: float = Field(ge=0.0, le=1.0)
    sim_cmd: float = Field(ge=0.0, le=1.0)
    sim_order: float = Field(ge=0.0, le=1.0)
    overall: float = Field(default=0.0, ge=0.0, le=1.0)
    w_stanza: float = SIMILARITY_WEIGHTS[0]
    w_cmd: float = SIMILARITY_WEIGHTS[1]
    w_order: float = SIMILARITY_WEIGHTS[2]
    closest: str | None = Field(default=None, description="Real config the maximum was reached on")

    @model_validator(mode="after")
    def _weighted(self) -> SimilarityReport:
        if not math.isclose(self.w_stanza + self.w_cmd + self.w_order, 1.0, abs_tol=1e-9):
            raise ValueError("similarity weights must sum to 1")
        self.overall = self.w_stanza * self.sim_stanza + self.w_cmd * self.sim_cmd + self.w_order * self.sim_order
        return self


class PathAnonymity(BaseModel):
    n_r: float = Field(ge=0.0, description="Mean distinct router-level paths per egress-router pair")
    pairs: int = 0


def _directive(stanza: Stanza) -> str:
    if stanza.kind == StanzaKind.OTHER:
        return f"other:{stanza.header.split()[0]}"
    return stanza.kind.value


def _signatures(stanza: Stanza) -> set[str]:
    commands = [stanza.header_command, *stanza.commands]
    return {c.signature for c in commands if c.tokens and not c.tokens[0].startswith("!")}


def stanza_similarity(a: RouterConfig, b: RouterConfig) -> float:
    counts_a = Counter(_directive(s) for s in a.stanzas)
    counts_b = Counter(_directive(s) for s in b.stanzas)
    keys = sorted(set(counts_a) | set(counts_b))
    va = np.array([counts_a[k] for k in keys], dtype=float)
    vb = np.array([counts_b[k] for k in keys], dtype=float)
    norm = float(np.linalg.norm(va) * np.linalg.norm(vb))
    if norm == 0.0:
        return 1.0 if not keys else 0.0
    return float(np.clip(va @ vb / norm, 0.0, 1.0))


def command_similarity(a: RouterConfig, b: RouterConfig) -> float:
    """Mean Jaccard of command signatures over stanzas aligned by kind and position."""
    by_kind_a: dict[str, list[Stanza]] = {}
    by_kind_b: dict[str, list[Stanza]] = {}
    for stanza in a.stanzas:
        by_kind_a.setdefault(_directive(stanza), []).append(stanza)
    for stanza in b.stanzas:
        by_kind_b.setdefault(_directive(stanza), []).append(stanza)
    scores = []
    for kind in sorted(set(by_kind_a) & set(by_kind_b)):
        for sa, sb in zip(by_kind_a[kind], by_kind_b[kind]):
            left, right = _signatures(sa), _signatures(sb)
            union = left | right
            scores.append(len(left & right) / len(union) if union else 1.0)
    return float(np.mean(scores)) if scores else 0.0


def _first_positions(cfg: RouterConfig) -> dict[str, int]:
    positions: dict[str, int] = {}
    for index, stanza in enumerate(cfg.stanzas):
        positions.setdefault(_directive(stanza), index)
    return positions


def order_similarity(a: RouterConfig, b: RouterConfig) -> float:
    pos_a, pos_b = _first_positions(a), _first_positions(b)
    common = sorted(set(pos_a) & set(pos_b))
    if not common:
        return 0.0
    if len(common) == 1:
        return 1.0
    tau = kendalltau([pos_a[k] for k in common], [pos_b[k] for k in common]).statistic
    if tau is None or np.isnan(tau):
        return 1.0
    return float(np.clip((tau + 1.0) / 2.0, 0.0, 1.0))


def similarity(
    fake: RouterConfig,
    reals: list[RouterConfig],
    weights: tuple[float, float, float] = SIMILARITY_WEIGHTS,
) -> SimilarityReport:
    """Best similarity of ``fake`` to any of ``reals``, by overall score."""
    w_stanza, w_cmd, w_order = weights
    best: SimilarityReport | None = None
    for real in reals:
        report = SimilarityReport(
            sim_stanza=stanza_similarity(fake, real),
            sim_cmd=command_similarity(fake, real),
            sim_order=order_similarity(fake, real),
            w_stanza=w_stanza,
            w_cmd=w_cmd,
            w_order=w_order,
            closest=real.hostname,
        )
        if best is None or report.overall > best.overall:
            best = report
    if best is None:
        return SimilarityReport(sim_stanza=0.0, sim_cmd=0.0, sim_order=0.0, w_stanza=w_stanza, w_cmd=w_cmd, w_order=w_order)
    return best


def mean_similarity(reports: list[SimilarityReport]) -> SimilarityReport | None:
    if not reports:
        return None
    first = reports[0]
    return SimilarityReport(
        sim_stanza=float(np.mean([r.sim_stanza for r in reports])),
        sim_cmd=float(np.mean([r.sim_cmd for r in reports])),
        sim_order=float(np.mean([r.sim_order for r in reports])),
        w_stanza=first.w_stanza,
        w_cmd=first.w_cmd,
        w_order=first.w_order,
    )


def skeleton_config(cfg: RouterConfig) -> RouterConfig:
    """From-scratch rendition of a config: hostname, addressed interfaces, bare protocols.

    Peer-groups are expanded into individual neighbors and no policy objects
    are kept. Used as the similarity baseline for generated configs.
    """
    lines = [f"hostname {cfg.hostname}"]
    for iface in cisco.interfaces(cfg):
        if iface.ip is None:
            continue
        lines += [f"interface {iface.name}", f" ip address {iface.ip} {iface.mask}"]
        if iface.ospf_cost is not None:
            lines.append(f" ip ospf cost {iface.ospf_cost}")
    process = cisco.ospf(cfg)
    if process is not None:
        lines.append(f"router ospf {process.process_id}")
        for iface in cisco.ospf_enabled_interfaces(cfg):
            network = iface.network
            lines.append(f" network {network.network_address} {prefixlen_to_wildcard(network.prefixlen)} area 0")
    speaker = cisco.bgp(cfg)
    if speaker is not None:
        lines.append(f"router bgp {speaker.asn}")
        for peer_ip in sorted(speaker.peer_ips()):
            neighbor = speaker.resolve(peer_ip)
            lines.append(f" neighbor {peer_ip} remote-as {neighbor.remote_as}")
        for prefix in speaker.networks:
            network = IPv4Network(prefix)
            lines.append(f" network {network.network_address} mask {network.netmask}")
    return cisco.parse_config("\n".join(lines) + "\n")


def path_anonymity(dp: DataPlane, egress: set[str] | None = None) -> PathAnonymity:
    """Mean number of distinct router-level paths per ordered egress-router pair.

    Only pairs of distinct routers in ``egress`` are counted (default: every
    router a path starts or ends on). No qualifying pair gives 0.
    """
    buckets: dict[tuple[str, str], set[tuple[str, ...]]] = {}
    for paths in dp.paths.values():
        for path in paths:
            first, last = path[1], path[-2]
            if first == last:
                continue
            if egress is not None and (first not in egress or last not in egress):
                continue
            buckets.setdefault((first, last), set()).add(tuple(path[1:-1]))
    if not buckets:
        return PathAnonymity(n_r=0.0, pairs=0)
    n_r = float(np.mean([len(paths) for paths in buckets.values()]))
    logger.debug(f"Path anonymity over {len(buckets)} egress pairs: {n_r:.3f}")
    return PathAnonymity(n_r=n_r, pairs=len(buckets))
