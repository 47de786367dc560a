"""Topology expansion: replica, sample-connect and degree-mapped embedding.

Every mode returns a Topology that contains the original router graph under
the original node names. Added routers carry node attributes describing where
they came from (``replica_of`` for replica layers, ``ref`` for reference nodes).
"""

from __future__ import annotations

import logging
import math
import re
from typing import Iterable

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import linear_sum_assignment

from .errors import IncompleteMatching, InvalidK, NoFeasibleReference
from .sampling import SamplingStrategy, sample_subgraph
from .topology import Topology

logger = logging.getLogger(__name__)

_NAME_RE = re.compile(r"^(.*?)(\d+)$")


class NodeMapping(BaseModel):
    """Injective map from original routers to target nodes."""

    map: dict[str, str] = Field(default_factory=dict)

    def image(self, node: str) -> str:
        return self.map[node]

    def inverse(self) -> dict[str, str]:
        return {target: source for source, target in self.map.items()}

    @classmethod
    def identity(cls, nodes: Iterable[str]) -> NodeMapping:
        return cls(map={n: n for n in nodes})


def fake_names(
    taken: Iterable[str], count: int, default_prefix: str = "r", avoid: Iterable[str] = ()
) -> list[str]:
    """Names for new nodes continuing the prefix+number pattern of ``taken``.

    The most common alphabetic prefix wins (ties: shortest, then alphabetical);
    numbering continues after the largest number in use with that prefix.
    Names in ``avoid`` are skipped without influencing the pattern.
    """
    taken = set(taken)
    blocked = taken | set(avoid)
    prefixes: dict[str, list[int]] = {}
    for name in taken:
        match = _NAME_RE.match(name)
        if match:
            prefixes.setdefault(match.group(1), []).append(int(match.group(2)))
    if prefixes:
        prefix = min(prefixes, key=lambda p: (-len(prefixes[p]), len(p), p))
        number = max(prefixes[prefix])
    else:
        prefix, number = default_prefix, 0
    names: list[str] = []
    while len(names) < count:
        number += 1
        candidate = f"{prefix}{number}"
        if candidate not in blocked:
            names.append(candidate)
    return names


# --- replica ---


def expand_replica(g: Topology, k: int) -> Topology:
    """k-fold replica: every router v gets one copy per extra layer 1 .. k-1.

    Copies take fresh names continuing the routers' naming pattern, layer by
    layer in router order, and carry ``replica_of`` and ``replica_layer``
    attributes. Copy v_i is adjacent to u_j (all layers i, j) whenever u ~ v
    in ``g``, so swapping any two layers is an automorphism and the real layer
    keeps its original adjacency. Hosts of ``g`` stay attached to their real gateway.

    Raises:
        InvalidK: k < 2
    """
    if k < 2:
        raise InvalidK(f"replica needs k >= 2, got {k}")
    routers = g.routers
    if routers and not nx.is_connected(g.router_graph()):
        logger.warning("Replicating a disconnected router graph")

    out = g.copy()
    names = iter(fake_names(routers, (k - 1) * len(routers), avoid=g.graph.nodes))
    copies = {(v, i): next(names) for i in range(1, k) for v in routers}

    def layer(node: str, i: int) -> str:
        return node if i == 0 else copies[(node, i)]

    for i in range(1, k):
        for v in routers:
            name = layer(v, i)
            out.add_router(name, g.as_of.get(v))
            out.graph.nodes[name]["replica_of"] = v
            out.graph.nodes[name]["replica_layer"] = i
    for u, v in sorted(tuple(sorted(e)) for e in g.router_graph().edges):
        for i in range(k):
            for j in range(k):
                if i == 0 and j == 0:
                    continue
                out.add_edge(layer(u, i), layer(v, j))
    logger.info(f"Replica x{k}: {len(routers)} -> {len(out.routers)} routers")
    return out


def layer_copies(replica: Topology, layer: int) -> dict[str, str]:
    """Real router -> its copy in ``layer`` of a replica; layer 0 is the identity."""
    if layer == 0:
        return {n: n for n in replica.routers if "replica_of" not in replica.graph.nodes[n]}
    return {
        data["replica_of"]: n
        for n, data in replica.graph.nodes(data=True)
        if data.get("replica_layer") == layer
    }


# --- node mapping and reference selection ---


def node_mapping(g: Topology, ref: Topology) -> NodeMapping:
    """Saturating degree-feasible matching of g's routers onto ref's routers.

    Eligible pairs satisfy deg_g(u) <= deg_ref(v). Among saturating matchings
    the one with the smallest total degree surplus is returned.

    Raises:
        IncompleteMatching: no matching saturates g's routers
    """
    rows, cols = g.routers, ref.routers
    if not rows:
        return NodeMapping()
    if len(rows) > len(cols):
        raise IncompleteMatching(f"{len(rows)} routers cannot map into {len(cols)} reference nodes")

    row_deg = np.array([g.degree(u) for u in rows])
    col_deg = np.array([ref.degree(v) for v in cols])
    surplus = col_deg[None, :] - row_deg[:, None]
    forbidden = 1 + len(rows) * (int(col_deg.max()) + 1)
    cost = np.where(surplus >= 0, surplus, forbidden)
    row_idx, col_idx = linear_sum_assignment(cost)
    if any(cost[r, c] >= forbidden for r, c in zip(row_idx, col_idx)):
        raise IncompleteMatching(f"no degree-feasible matching of {g.name or 'graph'} into {ref.name}")
    return NodeMapping(map={rows[r]: cols[c] for r, c in zip(row_idx, col_idx)})


def select_reference(
    library: list[Topology],
    wanted_total: int,
    original: Topology | None = None,
) -> Topology:
    """Pick the library graph closest in size to ``wanted_total``.

    Feasible graphs admit a complete node mapping from ``original``; without
    an original, a graph is feasible when it has at least ``wanted_total``
    routers. Ties prefer the larger graph, then the smaller name.

    Raises:
        NoFeasibleReference: nothing in the library is feasible
    """
    ranked = sorted(library, key=lambda t: (abs(len(t) - wanted_total), -len(t), t.name))
    for candidate in ranked:
        if original is None:
            if len(candidate) >= wanted_total:
                return candidate
            continue
        try:
            node_mapping(original, candidate)
        except IncompleteMatching:
            logger.debug(f"Reference {candidate.name} admits no complete mapping")
            continue
        return candidate
    raise NoFeasibleReference(f"no reference topology fits {wanted_total} routers")


# --- greedy embedding ---


class EmbeddingState:
    """Graph under construction with target degrees and protected edges."""

    def __init__(self, graph: nx.Graph, target_deg: dict[str, int], protected: set[frozenset[str]]):
        self.graph = graph
        self.target_deg = target_deg
        self.protected = protected

    def need(self, node: str) -> int:
        return self.target_deg[node] - self.graph.degree(node)

    def under_target(self) -> list[str]:
        return sorted(n for n in self.graph.nodes if self.need(n) > 0)


def edge_completion(state: EmbeddingState) -> int:
    """Havel-Hakimi style completion; returns the number of edges added.

    Repeatedly takes the node with the largest need (ties: lowest id) and
    connects it to the non-adjacent nodes with the largest needs.
    """
    added = 0
    while True:
        pending = [n for n in state.graph.nodes if state.need(n) > 0]
        if not pending:
            return added
        u = min(pending, key=lambda n: (-state.need(n), n))
        others = sorted(
            (v for v in pending if v != u and not state.graph.has_edge(u, v)),
            key=lambda v: (-state.need(v), v),
        )
        progress = 0
        for v in others:
            if state.need(u) <= 0:
                break
            state.graph.add_edge(u, v)
            progress += 1
        added += progress
        if progress == 0:
            return added


def _find_swap(state: EmbeddingState, u: str, v: str) -> tuple[str, str] | None:
    for x, y in sorted(tuple(sorted(e)) for e in state.graph.edges):
        if frozenset((x, y)) in state.protected:
            continue
        for a, b in ((x, y), (y, x)):
            if a in (u, v) or b in (u, v):
                continue
            if state.graph.has_edge(u, a) or state.graph.has_edge(v, b):
                continue
            return a, b
    return None


def edge_rearrangement(state: EmbeddingState) -> int:
    """Rewire unprotected edges (x, y) into (u, x), (v, y) for under-target u, v.

    ``u == v`` is allowed when the node lacks at least two edges. Stops when a
    full pass finds no swap; returns the number of swaps.
    """
    swaps = 0
    while True:
        under = state.under_target()
        pairs = [(u, v) for i, u in enumerate(under) for v in under[i + 1:]]
        pairs += [(u, u) for u in under if state.need(u) >= 2]
        swapped = False
        for u, v in pairs:
            if state.need(u) <= 0 or state.need(v) <= 0 or (u == v and state.need(u) < 2):
                continue
            found = _find_swap(state, u, v)
            if found is None:
                continue
            x, y = found
            state.graph.remove_edge(x, y)
            state.graph.add_edge(u, x)
            state.graph.add_edge(v, y)
            swaps += 1
            swapped = True
            break
        if not swapped:
            return swaps


def bridge_components(graph: nx.Graph, real: set[str]) -> int:
    """Join every component without a real router to the real part; returns edges added.

    Each bridge runs between the lowest-degree node of the component and the
    lowest-degree real router (ties: smaller name).
    """
    anchors = sorted(real & set(graph.nodes))
    if not anchors:
        return 0
    added = 0
    for component in sorted(nx.connected_components(graph), key=lambda c: sorted(c)):
        if component & real:
            continue
        u = min(component, key=lambda n: (graph.degree(n), n))
        v = min(anchors, key=lambda n: (graph.degree(n), n))
        graph.add_edge(u, v)
        added += 1
    return added


def embedding_nodes(g: Topology, ref: Topology, mapping: NodeMapping) -> dict[str, str]:
    """Output node name -> reference node for an embedding of g into ref.

    Real routers keep their names; unmatched reference nodes become fake
    routers named after the real naming pattern, in reference-node order.
    """
    nodes = {u: target for u, target in mapping.map.items()}
    used = set(mapping.map.values())
    spare = [v for v in ref.routers if v not in used]
    names = fake_names(g.routers, len(spare), avoid=g.graph.nodes)
    nodes.update(zip(names, spare))
    return nodes


def embed_graph_greedy(g: Topology, ref: Topology) -> tuple[Topology, NodeMapping]:
    """Embed g into a graph whose degree sequence follows ref.

    Raises:
        IncompleteMatching: no degree-feasible mapping of g into ref
    """
    mapping = node_mapping(g, ref)
    nodes = embedding_nodes(g, ref, mapping)

    graph = nx.Graph()
    graph.add_nodes_from(sorted(nodes))
    graph.add_edges_from(g.router_graph().edges)
    protected = {frozenset(e) for e in g.router_graph().edges}
    target = {n: max(ref.degree(r), g.degree(n) if n in mapping.map else 0) for n, r in nodes.items()}

    state = EmbeddingState(graph, target, protected)
    added = edge_completion(state)
    swaps = edge_rearrangement(state)
    bridges = bridge_components(graph, set(mapping.map))
    logger.info(
        f"Embedding into {ref.name}: {added} edges added, {swaps} swaps, {bridges} bridges, "
        f"{len(state.under_target())} nodes under target"
    )

    out = g.copy()
    for node, ref_node in sorted(nodes.items()):
        if node not in mapping.map:
            out.add_router(node)
        out.graph.nodes[node]["ref"] = ref_node
    for u, v in sorted(tuple(sorted(e)) for e in graph.edges):
        if not out.has_edge(u, v):
            out.add_edge(u, v)
    for u, v in list(out.router_graph().edges):
        if not graph.has_edge(u, v):
            out.graph.remove_edge(u, v)
    return out, mapping


# --- sample-connect ---


def bridge_count(n_add: int) -> int:
    return max(1, math.ceil(n_add / 4))


def expand_sample_connect(
    g: Topology,
    ref: Topology,
    n_add: int,
    strat: SamplingStrategy,
    seed: int,
) -> Topology:
    """Union of g with an n_add-node sample of ref, joined by random bridges.

    Raises:
        ValueError: n_add < 1
        UnreachableTarget: the sampler cannot reach n_add nodes
    """
    if n_add < 1:
        raise ValueError(f"n_add must be >= 1, got {n_add}")
    sample = sample_subgraph(ref, n_add, strat)
    names = dict(zip(sample.routers, fake_names(g.routers, n_add, avoid=g.graph.nodes)))

    out = g.copy()
    for node in sample.routers:
        out.add_router(names[node])
        out.graph.nodes[names[node]]["ref"] = node
    for u, v in sorted(tuple(sorted(e)) for e in sample.graph.edges):
        out.add_edge(names[u], names[v])

    rng = np.random.default_rng(seed)
    real, fake = g.routers, sorted(names.values())
    pairs = [(r, f) for r in real for f in fake]
    wanted = min(bridge_count(n_add), len(pairs))
    if pairs:
        for index in sorted(rng.choice(len(pairs), size=wanted, replace=False)):
            out.add_edge(*pairs[index])
    logger.info(f"Sample-connect: {n_add} sampled routers, {wanted} bridges")
    return out
