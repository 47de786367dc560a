"""End-to-end anonymization run: preprocess, expand, anonymize, generate,
repair and verify.

run_pipeline() writes the anonymized snapshot and returns a RunReport; a
failed verification is reported, not raised, so the output is still written.
"""

from __future__ import annotations

import json
import logging
import math
import time
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Iterator

from pydantic import BaseModel, Field, computed_field, model_validator

from .anonymization import AnonymityParams, KdmaLevel, check_kdma, kda_baseline, kdma_greedy, kdma_maxsmt
from .config import REPORT_SCHEMA, get_reference_dir
from .confgen import expand_network, mimic_filters, plan_expansion
from .errors import NetveilError, NoFeasibleReference
from .expansion import NodeMapping, embed_graph_greedy, expand_replica, expand_sample_connect, select_reference
from .repair import IbgpStrategy, RepairLog, interas_repair, intra_as_repair
from .sampling import SamplingStrategy
from .similarity import SimilarityReport, mean_similarity, path_anonymity, similarity, skeleton_config
from .simulator import DataPlane, dataplane, dump_fibs, load_fibs, simulate
from .snapshot import NetworkSnapshot, load_snapshot, write_snapshot
from .topology import RationalityScore, Topology, extract_topology, load_library, rationality

logger = logging.getLogger(__name__)


class ExpansionMode(str, Enum):
    REPLICA = "replica"
    SAMPLE_CONNECT = "sample-connect"
    EMBEDDING = "embedding"


class Anonymizer(str, Enum):
    GREEDY = "greedy"
    MAXSMT = "maxsmt"
    KDA = "kda"


class RepairMode(str, Enum):
    CONSTRAINT = "constraint"
    ITERATIVE = "iterative"


class RunConfig(BaseModel):
    input_dir: Path
    output_dir: Path
    reference_dir: Path | None = None
    mode: ExpansionMode = ExpansionMode.EMBEDDING
    add_routers: int | None = Field(default=None, ge=0, description="Default: params.mul x original routers")
    params: AnonymityParams = Field(default_factory=AnonymityParams)
    anonymizer: Anonymizer = Anonymizer.GREEDY
    sampling: SamplingStrategy = Field(default_factory=SamplingStrategy)
    repair_mode: RepairMode = RepairMode.CONSTRAINT
    ibgp_strategy: IbgpStrategy = IbgpStrategy.FILTER_NEXTHOP
    seed: int = Field(default=0, ge=0, lt=2**64)
    report_path: Path | None = None
    filter_mimicry: bool = True
    timings: bool = False
    solver_timeout_ms: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _distinct_dirs(self) -> RunConfig:
        if self.input_dir.resolve() == self.output_dir.resolve():
            raise ValueError("output directory must differ from the input directory")
        return self


class MissingPath(BaseModel):
    src: str
    dst: str
    path: list[str]


class EquivalenceReport(BaseModel):
    missing: list[MissingPath] = Field(default_factory=list)

    @computed_field
    @property
    def equivalent(self) -> bool:
        return not self.missing


class RepairSummary(BaseModel):
    intra: list[RepairLog] = Field(default_factory=list)
    inter: RepairLog | None = None


class RunReport(BaseModel):
    schema_version: int = Field(default=REPORT_SCHEMA, serialization_alias="schema")
    seed: int
    mode: ExpansionMode
    anonymizer: Anonymizer
    repair_mode: RepairMode
    reference: str | None = None
    original_routers: int
    original_hosts: int
    requested_adds: int
    actual_adds: int
    anonymized_hosts: int = 0
    rationality: RationalityScore | None = None
    kdma_check: dict[str, bool] = Field(default_factory=dict)
    maxsmt_objective: int | None = None
    similarity: SimilarityReport | None = None
    skeleton_similarity: SimilarityReport | None = None
    n_r_before: float = 0.0
    n_r_after: float = 0.0
    repair: RepairSummary = Field(default_factory=RepairSummary)
    equivalence: EquivalenceReport = Field(default_factory=EquivalenceReport)
    timings: dict[str, float] | None = None

    @computed_field
    @property
    def gap(self) -> int:
        return self.actual_adds - self.requested_adds

    @computed_field
    @property
    def verified(self) -> bool:
        return self.equivalence.equivalent and all(self.kdma_check.values())

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", by_alias=True), indent=2) + "\n"


# --- verification ---


def _as_dataplane(network: NetworkSnapshot | DataPlane) -> DataPlane:
    if isinstance(network, DataPlane):
        return network
    return dataplane(network)


def verify_equivalence(
    original: NetworkSnapshot | DataPlane,
    anonymized: NetworkSnapshot | DataPlane,
    mapping: NodeMapping | None = None,
) -> EquivalenceReport:
    """Original data-plane paths whose image is missing from the anonymized data plane."""
    before, after = _as_dataplane(original), _as_dataplane(anonymized)
    image = mapping.map if mapping is not None else {}
    report = EquivalenceReport()
    for (src, dst), paths in sorted(before.paths.items()):
        mapped_pair = (image.get(src, src), image.get(dst, dst))
        present = set(after.paths.get(mapped_pair, []))
        for path in paths:
            mapped = tuple(image.get(node, node) for node in path)
            if mapped not in present:
                report.missing.append(MissingPath(src=src, dst=dst, path=list(path)))
    if report.missing:
        logger.warning(f"{len(report.missing)} original paths missing after anonymization")
    return report


# --- pipeline ---


@contextmanager
def _phase(name: str, timings: dict[str, float]) -> Iterator[None]:
    start = time.perf_counter()
    logger.info(f"Phase {name}")
    try:
        yield
    except NetveilError as e:
        if e.phase is None:
            e.phase = name
        raise
    finally:
        timings[name] = round(time.perf_counter() - start, 6)


def replica_factor(n_routers: int, add: int) -> int:
    """Replica count covering ``add`` new routers; adds come in multiples of the router count."""
    return max(2, 1 + math.ceil(add / max(1, n_routers)))


def _expand(cfg: RunConfig, topo: Topology, add: int) -> tuple[Topology, Topology | None, NodeMapping | None]:
    if cfg.mode == ExpansionMode.REPLICA:
        return expand_replica(topo, replica_factor(len(topo.routers), add)), None, None
    try:
        library = load_library(cfg.reference_dir or get_reference_dir())
    except FileNotFoundError as e:
        raise NoFeasibleReference(str(e)) from e
    if cfg.mode == ExpansionMode.SAMPLE_CONNECT:
        if add == 0:
            return topo.copy(), None, None
        ref = select_reference(library, add)
        return expand_sample_connect(topo, ref, add, cfg.sampling, cfg.seed), ref, None
    ref = select_reference(library, len(topo.routers) + add, topo)
    g_emb, mapping = embed_graph_greedy(topo, ref)
    return g_emb, ref, mapping


def _anonymize(
    cfg: RunConfig, topo: Topology, g_emb: Topology, ref: Topology | None, mapping: NodeMapping | None
) -> tuple[Topology, int | None]:
    params = cfg.params
    if cfg.anonymizer == Anonymizer.GREEDY:
        return kdma_greedy(topo, g_emb, params, cfg.seed), None
    if cfg.anonymizer == Anonymizer.KDA:
        return kda_baseline(g_emb, params.k_R, cfg.seed), None
    if ref is None or mapping is None:
        return kdma_maxsmt(
            topo, g_emb, NodeMapping.identity(topo.routers), params.k_R, params.kdma_level,
            cfg.solver_timeout_ms, extends=True,
        )
    return kdma_maxsmt(topo, ref, mapping, params.k_R, params.kdma_level, cfg.solver_timeout_ms)


def _ebgp_routers(snapshot: NetworkSnapshot, real: set[str]) -> set[str]:
    sim = simulate(snapshot)
    return {r for key, session in sim.sessions.items() if session.ebgp for r in key if r in real}


def run_pipeline(cfg: RunConfig) -> RunReport:
    """Anonymize ``cfg.input_dir`` into ``cfg.output_dir``.

    Raises:
        NetveilError: from any phase, with ``phase`` set
    """
    timings: dict[str, float] = {}

    with _phase("preprocess", timings):
        original = load_snapshot(cfg.input_dir)
        topo = extract_topology(original)
        sim_original = simulate(original)
        dp_original = dataplane(original, sim_original.fibs)
        stored_fibs = load_fibs(dump_fibs(sim_original.fibs))
        n = len(topo.routers)
        add = cfg.add_routers if cfg.add_routers is not None else cfg.params.mul * n

    with _phase("expand", timings):
        g_emb, ref, mapping = _expand(cfg, topo, add)

    with _phase("anonymize", timings):
        g_anon, objective = _anonymize(cfg, topo, g_emb, ref, mapping)

    with _phase("generate", timings):
        plan = plan_expansion(topo, g_anon, original, cfg.params.k_H)
        expanded = expand_network(plan, original)
        if cfg.filter_mimicry:
            expanded = mimic_filters(expanded, plan.host_map)

    real = set(original.routers)
    host_prefixes = sorted({str(original.hosts[h].network) for h in original.host_names})
    repair = RepairSummary()
    with _phase("repair", timings):
        repaired = expanded
        if cfg.repair_mode == RepairMode.CONSTRAINT:
            repaired, repair.intra = intra_as_repair(sim_original, expanded, cfg.solver_timeout_ms)
            watched = sorted(_ebgp_routers(original, real) | _ebgp_routers(repaired, real))
        else:
            watched = sorted(real)
        repaired, repair.inter = interas_repair(
            repaired,
            stored_fibs,
            routers=watched,
            prefixes=host_prefixes,
            strategy=cfg.ibgp_strategy,
            original_links=topo.router_edges(),
        )

    with _phase("verify", timings):
        dp_final = dataplane(repaired)
        equivalence = verify_equivalence(dp_original, dp_final)
        final_topo = extract_topology(repaired)
        kdma = {level.value: check_kdma(topo, final_topo, cfg.params.k_R, level) for level in KdmaLevel}
        if cfg.params.kdma_level == KdmaLevel.WEAK:
            kdma = {KdmaLevel.WEAK.value: kdma[KdmaLevel.WEAK.value]}
        reals = [original.configs[r] for r in original.routers]
        fakes = sorted(plan.template_of)
        mimicry = mean_similarity([similarity(repaired.configs[f], reals) for f in fakes])
        skeleton = mean_similarity([similarity(skeleton_config(repaired.configs[f]), reals) for f in fakes])
        egress = {original.hosts[h].gateway_router for h in original.host_names}
        report = RunReport(
            seed=cfg.seed,
            mode=cfg.mode,
            anonymizer=cfg.anonymizer,
            repair_mode=cfg.repair_mode,
            reference=ref.name if ref is not None else None,
            original_routers=n,
            original_hosts=len(original.hosts),
            requested_adds=add,
            actual_adds=len(g_anon.routers) - n,
            anonymized_hosts=len(repaired.hosts),
            rationality=rationality(g_anon, ref) if ref is not None else None,
            kdma_check=kdma,
            maxsmt_objective=objective,
            similarity=mimicry,
            skeleton_similarity=skeleton,
            n_r_before=path_anonymity(dp_original, egress).n_r,
            n_r_after=path_anonymity(dp_final, egress).n_r,
            repair=repair,
            equivalence=equivalence,
        )

    write_snapshot(repaired, cfg.output_dir)
    if cfg.timings:
        report.timings = timings
    if cfg.report_path is not None:
        cfg.report_path.parent.mkdir(parents=True, exist_ok=True)
        cfg.report_path.write_text(report.to_json(), encoding="utf-8")
    level = "verified" if report.verified else "NOT verified"
    logger.info(f"Run {level}: {report.actual_adds} routers added, {len(equivalence.missing)} paths missing")
    return report
