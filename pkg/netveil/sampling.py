"""Graph sampling strategies used to pick fake nodes from a reference topology.

Traversal family: BFS, DFS, RFS (random-first), SBS (snowball), FFS (forest fire).
Walk family: RW, MHRW (Metropolis-Hastings), MHDA (non-backtracking MH with
delayed acceptance), RCMH (rejection-controlled MH).

Strategies register themselves with @sampler(SamplingKind.X) and receive a
seeded ``numpy.random.Generator``; the seed fully determines the sample.
"""

from __future__ import annotations

import logging
from collections import deque
from enum import Enum
from typing import Callable

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field

from .config import FFS_FIRE_PROBABILITY, RCMH_ALPHA, SBS_BRANCHING
from .errors import UnreachableTarget
from .topology import Topology, degree_sequence, ks_distance

logger = logging.getLogger(__name__)


class SamplingKind(str, Enum):
    BFS = "BFS"
    DFS = "DFS"
    RFS = "RFS"
    SBS = "SBS"
    FFS = "FFS"
    RW = "RW"
    MHRW = "MHRW"
    MHDA = "MHDA"
    RCMH = "RCMH"


TRAVERSAL_FAMILY = (SamplingKind.BFS, SamplingKind.DFS, SamplingKind.RFS, SamplingKind.SBS, SamplingKind.FFS)
WALK_FAMILY = (SamplingKind.RW, SamplingKind.MHRW, SamplingKind.MHDA, SamplingKind.RCMH)


class SamplingStrategy(BaseModel):
    kind: SamplingKind = SamplingKind.RW
    fire_probability: float = Field(default=FFS_FIRE_PROBABILITY, gt=0.0, lt=1.0)
    rcmh_alpha: float = Field(default=RCMH_ALPHA, ge=0.0, le=1.0)
    sbs_branching: int = Field(default=SBS_BRANCHING, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    def params(self) -> dict:
        """Strategy-specific parameters, as recorded in run reports."""
        if self.kind == SamplingKind.FFS:
            return {"fire_probability": self.fire_probability}
        if self.kind == SamplingKind.RCMH:
            return {"alpha": self.rcmh_alpha}
        if self.kind == SamplingKind.SBS:
            return {"branching": self.sbs_branching}
        return {}


SamplerFn = Callable[[nx.Graph, int, SamplingStrategy, np.random.Generator], list[str]]


class SamplerRegistry:
    """Registry of sampling functions keyed by SamplingKind."""

    _samplers: dict[SamplingKind, SamplerFn] = {}

    @classmethod
    def register(cls, kind: SamplingKind) -> Callable[[SamplerFn], SamplerFn]:
        def decorator(fn: SamplerFn) -> SamplerFn:
            if kind in cls._samplers:
                logger.warning(f"Overwriting existing sampler: {kind.value}")
            cls._samplers[kind] = fn
            return fn
        return decorator

    @classmethod
    def get(cls, kind: SamplingKind) -> SamplerFn:
        return cls._samplers[kind]

    @classmethod
    def list_kinds(cls) -> list[SamplingKind]:
        return list(cls._samplers)


sampler = SamplerRegistry.register


def _pick(rng: np.random.Generator, items: list[str]) -> str:
    return items[int(rng.integers(len(items)))]


def _neighbors(graph: nx.Graph, node: str) -> list[str]:
    return sorted(graph.neighbors(node))


def _frontier(graph: nx.Graph, visited: set[str]) -> list[str]:
    return sorted({n for v in visited for n in graph.neighbors(v)} - visited)


@sampler(SamplingKind.BFS)
def _bfs(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    start = _pick(rng, sorted(graph.nodes))
    order, seen, queue = [], {start}, deque([start])
    while queue and len(order) < n:
        node = queue.popleft()
        order.append(node)
        for nb in _neighbors(graph, node):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return order


@sampler(SamplingKind.DFS)
def _dfs(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    start = _pick(rng, sorted(graph.nodes))
    order, seen, stack = [], set(), [start]
    while stack and len(order) < n:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        order.append(node)
        stack.extend(reversed([nb for nb in _neighbors(graph, node) if nb not in seen]))
    return order


@sampler(SamplingKind.RFS)
def _rfs(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    # expand a uniformly random frontier node at every step
    start = _pick(rng, sorted(graph.nodes))
    order, visited = [start], {start}
    while len(order) < n:
        frontier = _frontier(graph, visited)
        if not frontier:
            break
        node = _pick(rng, frontier)
        visited.add(node)
        order.append(node)
    return order


@sampler(SamplingKind.SBS)
def _sbs(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    start = _pick(rng, sorted(graph.nodes))
    order, visited, queue = [start], {start}, deque([start])
    while len(order) < n:
        if not queue:
            # snowball stalled: reseed from the frontier
            frontier = _frontier(graph, visited)
            if not frontier:
                break
            node = _pick(rng, frontier)
            visited.add(node)
            order.append(node)
            queue.append(node)
            continue
        node = queue.popleft()
        fresh = [nb for nb in _neighbors(graph, node) if nb not in visited]
        if len(fresh) > strat.sbs_branching:
            picked = rng.choice(len(fresh), size=strat.sbs_branching, replace=False)
            fresh = [fresh[i] for i in sorted(picked)]
        for nb in fresh:
            if len(order) >= n:
                break
            visited.add(nb)
            order.append(nb)
            queue.append(nb)
    return order


@sampler(SamplingKind.FFS)
def _ffs(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    start = _pick(rng, sorted(graph.nodes))
    order, visited, burning = [start], {start}, deque([start])
    while len(order) < n:
        if not burning:
            frontier = _frontier(graph, visited)
            if not frontier:
                break
            node = _pick(rng, frontier)
            visited.add(node)
            order.append(node)
            burning.append(node)
            continue
        node = burning.popleft()
        fresh = [nb for nb in _neighbors(graph, node) if nb not in visited]
        if not fresh:
            continue
        # geometric burn count with mean p / (1 - p)
        count = min(len(fresh), int(rng.geometric(1.0 - strat.fire_probability)) - 1)
        if count <= 0:
            continue
        picked = rng.choice(len(fresh), size=count, replace=False)
        for i in sorted(picked):
            if len(order) >= n:
                break
            visited.add(fresh[i])
            order.append(fresh[i])
            burning.append(fresh[i])
    return order


def _walk(
    graph: nx.Graph,
    n: int,
    rng: np.random.Generator,
    accept: Callable[[str, str], float],
    non_backtracking: bool = False,
) -> list[str]:
    current = _pick(rng, sorted(graph.nodes))
    previous: str | None = None
    order, visited = [current], {current}
    if len(nx.node_connected_component(graph, current)) < n:
        return order
    budget = 200 * graph.number_of_nodes() * max(1, n)
    for _ in range(budget):
        if len(order) >= n:
            break
        neighbors = _neighbors(graph, current)
        if not neighbors:
            break
        if non_backtracking and previous is not None and len(neighbors) > 1:
            neighbors = [nb for nb in neighbors if nb != previous]
        proposal = _pick(rng, neighbors)
        if rng.random() >= accept(current, proposal):
            continue
        previous, current = current, proposal
        if current not in visited:
            visited.add(current)
            order.append(current)
    return order


@sampler(SamplingKind.RW)
def _rw(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    return _walk(graph, n, rng, lambda v, w: 1.0)


@sampler(SamplingKind.MHRW)
def _mhrw(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    return _walk(graph, n, rng, lambda v, w: min(1.0, graph.degree(v) / graph.degree(w)))


@sampler(SamplingKind.MHDA)
def _mhda(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    return _walk(
        graph, n, rng, lambda v, w: min(1.0, graph.degree(v) / graph.degree(w)), non_backtracking=True
    )


@sampler(SamplingKind.RCMH)
def _rcmh(graph: nx.Graph, n: int, strat: SamplingStrategy, rng: np.random.Generator) -> list[str]:
    alpha = strat.rcmh_alpha
    return _walk(graph, n, rng, lambda v, w: min(1.0, (graph.degree(v) / graph.degree(w)) ** alpha))


def sample_subgraph(ref: Topology, n: int, strat: SamplingStrategy) -> Topology:
    """Sample ``n`` routers of ``ref`` and return their induced subgraph.

    Raises:
        ValueError: n outside [1, |ref|]
        UnreachableTarget: the strategy cannot reach n distinct nodes
    """
    graph = ref.router_graph()
    size = graph.number_of_nodes()
    if not 1 <= n <= size:
        raise ValueError(f"sample size {n} outside [1, {size}]")
    if n == size:
        return Topology(nx.Graph(graph), name=ref.name)

    rng = np.random.default_rng(strat.seed)
    nodes = SamplerRegistry.get(strat.kind)(graph, n, strat, rng)
    if len(nodes) < n:
        raise UnreachableTarget(f"{strat.kind.value} reached {len(nodes)} of {n} nodes in {ref.name or 'reference'}")
    sample = Topology(nx.Graph(graph.subgraph(nodes)), name=f"{ref.name}-{strat.kind.value}")
    logger.debug(f"Sampled {n} nodes from {ref.name} with {strat.kind.value}")
    return sample


class StrategySummary(BaseModel):
    kind: SamplingKind
    mean_ks: float
    std_ks: float
    samples: int


class SamplingReport(BaseModel):
    rate: float
    trials: int
    seed: int
    graphs: int
    strategies: list[StrategySummary]
    traversal_mean: float
    walk_mean: float


def sampling_report(library: list[Topology], rate: float, trials: int, seed: int) -> SamplingReport:
    """Compare every registered strategy by K-S distance of sample to reference."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"sampling rate {rate} outside (0, 1]")
    seeds = np.random.default_rng(seed)
    distances: dict[SamplingKind, list[float]] = {kind: [] for kind in SamplerRegistry.list_kinds()}
    for ref in library:
        reference_degrees = degree_sequence(ref)
        if not reference_degrees.values:
            continue
        n = max(1, round(rate * len(ref)))
        for _ in range(trials):
            trial_seed = int(seeds.integers(2**63))
            for kind in distances:
                try:
                    sample = sample_subgraph(ref, n, SamplingStrategy(kind=kind, seed=trial_seed))
                except UnreachableTarget as e:
                    logger.debug(f"Skipping trial: {e}")
                    continue
                distances[kind].append(ks_distance(degree_sequence(sample), reference_degrees))

    summaries = [
        StrategySummary(
            kind=kind,
            mean_ks=float(np.mean(values)) if values else 0.0,
            std_ks=float(np.std(values)) if values else 0.0,
            samples=len(values),
        )
        for kind, values in distances.items()
    ]

    def family_mean(kinds: tuple[SamplingKind, ...]) -> float:
        values = [d for kind in kinds for d in distances.get(kind, [])]
        return float(np.mean(values)) if values else 0.0

    return SamplingReport(
        rate=rate,
        trials=trials,
        seed=seed,
        graphs=len(library),
        strategies=summaries,
        traversal_mean=family_mean(TRAVERSAL_FAMILY),
        walk_mean=family_mean(WALK_FAMILY),
    )
