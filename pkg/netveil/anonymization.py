"""k-degree-mapping anonymity: checks, the greedy enforcer, the MaxSMT variant
and the k-degree-anonymity baseline.

Degrees are router degrees throughout; hosts never count.
"""

from __future__ import annotations

import logging
from enum import Enum

import networkx as nx
import numpy as np
import z3
from pydantic import BaseModel, Field

from .config import get_solver_timeout_ms
from .errors import Infeasible, SolverTimeout, Unsatisfiable
from .expansion import NodeMapping, bridge_components, embedding_nodes
from .topology import Topology

logger = logging.getLogger(__name__)


class KdmaLevel(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


class AnonymityParams(BaseModel):
    k_R: int = Field(default=2, ge=1, description="Router anonymity k")
    k_H: int = Field(default=2, ge=1, description="Hosts per real host, the real one included")
    kdma_level: KdmaLevel = KdmaLevel.STRONG
    mul: int = Field(default=1, ge=1, description="Added routers per original router when unspecified")


def needed_number(k: int, index: int, level: KdmaLevel) -> int:
    """Nodes of degree >= d_i required for the i-th largest original degree (0-based)."""
    return k if level == KdmaLevel.WEAK else k + index


def _original_degrees(g: Topology) -> list[int]:
    return sorted((g.degree(r) for r in g.routers), reverse=True)


def check_kdma(g: Topology, g_anon: Topology, k: int, level: KdmaLevel | str) -> bool:
    level = KdmaLevel(level)
    anon_degrees = [g_anon.degree(r) for r in g_anon.routers]
    for index, d in enumerate(_original_degrees(g)):
        count = sum(1 for a in anon_degrees if a >= d)
        if count < needed_number(k, index, level):
            return False
    return True


# --- greedy ---


def kdma_greedy(g: Topology, g_emb: Topology, params: AnonymityParams, seed: int = 0) -> Topology:
    """Raise candidate degrees by random edge additions until k-DMA holds.

    Original degrees are processed in descending order. Candidates are the
    nodes below the current degree, by descending degree then id. Edge
    endpoints prefer fake-fake pairs, then fake-real, then real-real; the
    endpoint is drawn at random inside the best available class.

    Raises:
        Infeasible: the graph is too small or a candidate runs out of endpoints
    """
    out = g_emb.copy()
    real = set(g.routers)
    rng = np.random.default_rng(seed)
    nodes = out.routers
    added = 0

    for index, d in enumerate(_original_degrees(g)):
        needed = needed_number(params.k_R, index, params.kdma_level)
        if needed > len(nodes):
            raise Infeasible(f"{needed} nodes of degree >= {d} needed, graph has {len(nodes)}")
        count = sum(1 for n in nodes if out.degree(n) >= d)
        if count >= needed:
            continue
        candidates = sorted((n for n in nodes if out.degree(n) < d), key=lambda n: (-out.degree(n), n))
        for cand in candidates[: needed - count]:
            while out.degree(cand) < d:
                target = _pick_endpoint(out, cand, nodes, real, rng)
                if target is None:
                    raise Infeasible(f"{cand} cannot reach degree {d} without multi-edges")
                out.add_edge(cand, target)
                added += 1

    logger.info(f"k-DMA greedy ({params.kdma_level.value}, k={params.k_R}): {added} edges added")
    return out


def _pick_endpoint(
    out: Topology, cand: str, nodes: list[str], real: set[str], rng: np.random.Generator
) -> str | None:
    free = [n for n in nodes if n != cand and not out.has_edge(cand, n)]
    if not free:
        return None
    classes: dict[int, list[str]] = {}
    for n in free:
        classes.setdefault((cand in real) + (n in real), []).append(n)
    best = classes[min(classes)]
    return best[int(rng.integers(len(best)))]


# --- MaxSMT ---


def kdma_maxsmt(
    g: Topology,
    ref: Topology,
    mapping: NodeMapping,
    k: int,
    level: KdmaLevel | str = KdmaLevel.STRONG,
    timeout_ms: int | None = None,
    extends: bool = False,
) -> tuple[Topology, int]:
    """Exact k-DMA embedding minimizing the total gap to reference degrees.

    Hard constraints pin every original edge and require, for the i-th largest
    original degree d_i, enough nodes of degree >= d_i. The soft objective is
    the sum over nodes of |degExpr(r) - eDeg(r)|.

    With ``extends`` set, ``ref`` already contains g under the same names
    (a replica or sample-connect expansion): its added routers keep their
    names and node attributes instead of being renamed after g's pattern.

    Returns:
        (anonymized topology, objective value)

    Raises:
        Unsatisfiable: the counting requirement exceeds the node count or the
            hard constraints conflict
        SolverTimeout: z3 gave up within the budget
    """
    level = KdmaLevel(level)
    nodes_ref = {n: n for n in ref.routers} if extends else embedding_nodes(g, ref, mapping)
    nodes = sorted(nodes_ref)
    degrees = _original_degrees(g)
    for index, d in enumerate(degrees):
        if needed_number(k, index, level) > len(nodes):
            raise Unsatisfiable(f"k={k} needs {needed_number(k, index, level)} nodes, only {len(nodes)} exist")

    expected = {n: ref.degree(nodes_ref[n]) for n in nodes}
    original_edges = g.router_edges()
    x = {}
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            x[frozenset((a, b))] = z3.Bool(f"x_{a}_{b}")

    opt = z3.Optimize()
    budget = timeout_ms if timeout_ms is not None else get_solver_timeout_ms()
    opt.set("timeout", budget)
    for edge in original_edges:
        opt.add(x[edge])

    deg_expr = {
        n: z3.Sum([z3.If(var, 1, 0) for pair, var in x.items() if n in pair]) if len(nodes) > 1 else z3.IntVal(0)
        for n in nodes
    }
    for index, d in enumerate(degrees):
        at_least = z3.Sum([z3.If(deg_expr[n] >= d, 1, 0) for n in nodes])
        opt.add(at_least >= needed_number(k, index, level))

    gap = z3.Sum([z3.If(deg_expr[n] >= expected[n], deg_expr[n] - expected[n], expected[n] - deg_expr[n]) for n in nodes])
    objective = opt.minimize(gap)

    result = opt.check()
    if result == z3.unknown:
        raise SolverTimeout(budget, "k-DMA MaxSMT")
    if result == z3.unsat:
        raise Unsatisfiable("k-DMA hard constraints are unsatisfiable")

    model = opt.model()
    out = g.copy()
    for n in nodes:
        if n not in mapping.map:
            if extends:
                out.add_router(n, ref.as_of.get(n))
                out.graph.nodes[n].update(ref.graph.nodes[n])
            else:
                out.add_router(n)
        if not extends:
            out.graph.nodes[n]["ref"] = nodes_ref[n]
    for pair, var in sorted(x.items(), key=lambda item: sorted(item[0])):
        if z3.is_true(model.eval(var, model_completion=True)) and not out.has_edge(*sorted(pair)):
            out.add_edge(*sorted(pair))
    routers = nx.Graph(out.router_graph())
    if bridge_components(routers, set(mapping.map)):
        for u, v in sorted(tuple(sorted(e)) for e in routers.edges):
            if not out.has_edge(u, v):
                out.add_edge(u, v)
    value = model.eval(objective.value(), model_completion=True).as_long()
    logger.info(f"k-DMA MaxSMT (k={k}): objective {value}")
    return out, value


# --- k-degree anonymity baseline ---


def _group_cost(degrees: list[int], i: int, j: int) -> int:
    return sum(degrees[i] - degrees[t] for t in range(i, j + 1))


def anonymized_sequence(degrees: list[int], k: int) -> list[int]:
    """Cheapest k-anonymous raise of a descending degree sequence.

    Dynamic program over groups of k to 2k-1 consecutive entries, each raised
    to the group's first (largest) value.
    """
    n = len(degrees)
    if n == 0:
        return []
    if n < 2 * k:
        return [degrees[0]] * n
    best: list[float] = [float("inf")] * n
    choice: list[int] = [-1] * n
    for i in range(n):
        if i + 1 < 2 * k:
            best[i] = _group_cost(degrees, 0, i)
            continue
        best[i] = _group_cost(degrees, 0, i)
        for t in range(max(k - 1, i - 2 * k + 1), i - k + 1):
            cost = best[t] + _group_cost(degrees, t + 1, i)
            if cost < best[i]:
                best[i], choice[i] = cost, t
    sequence: list[int] = [0] * n
    end = n - 1
    while end >= 0:
        start = choice[end] + 1
        for t in range(start, end + 1):
            sequence[t] = degrees[start]
        end = choice[end]
    return sequence


def _realize(graph: nx.Graph, target: dict[str, int], rng: np.random.Generator) -> list[tuple[str, str]] | None:
    """Add edges so every node reaches its target degree, or None if stuck."""
    residual = {n: target[n] - graph.degree(n) for n in graph.nodes}
    added: list[tuple[str, str]] = []
    while True:
        positive = sorted(n for n, r in residual.items() if r > 0)
        if not positive:
            return added
        u = positive[int(rng.integers(len(positive)))]
        partners = sorted(
            (v for v in positive if v != u and not graph.has_edge(u, v)),
            key=lambda v: (-residual[v], v),
        )
        if len(partners) < residual[u]:
            return None
        for v in partners[: residual[u]]:
            graph.add_edge(u, v)
            added.append((u, v))
            residual[v] -= 1
        residual[u] = 0


def kda_baseline(g: Topology, k: int, seed: int = 0, max_attempts: int | None = None) -> Topology:
    """Edge-adding k-degree anonymization of the router graph.

    Every degree value of the output occurs at least k times. When the
    anonymized sequence is not realizable as a supergraph, the smallest
    degrees are nudged up and the sequence is recomputed.

    Raises:
        Infeasible: k exceeds the router count or no realization was found
    """
    routers = g.routers
    if k <= 1 or not routers:
        return g.copy()
    if k > len(routers):
        raise Infeasible(f"k={k} exceeds {len(routers)} routers")

    rng = np.random.default_rng(seed)
    noisy = {r: g.degree(r) for r in routers}
    attempts = max_attempts if max_attempts is not None else 10 * len(routers)
    for attempt in range(attempts):
        order = sorted(routers, key=lambda r: (-noisy[r], r))
        sequence = anonymized_sequence([noisy[r] for r in order], k)
        target = dict(zip(order, sequence))
        if max(target.values()) < len(routers):
            graph = nx.Graph(g.router_graph())
            added = _realize(graph, target, rng)
            if added is not None:
                out = g.copy()
                for u, v in added:
                    out.add_edge(u, v)
                logger.info(f"k-DA baseline (k={k}): {len(added)} edges added after {attempt + 1} attempts")
                return out
        low = sorted(routers, key=lambda r: (noisy[r], r))[0]
        noisy[low] = min(noisy[low] + 1, len(routers) - 1)
    raise Infeasible(f"no k-degree-anonymous supergraph found for k={k}")
