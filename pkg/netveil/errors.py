"""Exception hierarchy for netveil.

Every error raised by the pipeline derives from NetveilError so that the CLI
can map it to a JSON error message and an exit code. The pipeline stamps the
phase it was in onto the error before re-raising.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFICATION_FAILED = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER_TIMEOUT = 4


class NetveilError(Exception):
    """Base class for all netveil errors."""

    exit_code: int = EXIT_ERROR

    def __init__(self, message: str = "", phase: str | None = None):
        super().__init__(message or self.__class__.__name__)
        self.phase = phase

    def to_dict(self) -> dict:
        return {
            "error": str(self),
            "type": self.__class__.__name__,
            "phase": self.phase,
        }


# --- config_model ---


class ConfigError(NetveilError):
    pass


class MalformedLine(ConfigError):
    def __init__(self, line_no: int, line: str, reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"line {line_no}: {line.strip()!r}{detail}")
        self.line_no = line_no
        self.line = line


class MissingHostname(ConfigError):
    pass


class DuplicateHostname(ConfigError):
    pass


class MalformedHost(ConfigError):
    pass


# --- topology / expansion ---


class TopologyError(NetveilError):
    pass


class AmbiguousSubnet(TopologyError):
    pass


class OrphanHost(TopologyError):
    pass


class EmptySequence(TopologyError):
    pass


class ExpansionError(NetveilError):
    pass


class InvalidK(ExpansionError):
    pass


class UnreachableTarget(ExpansionError):
    pass


class NoFeasibleReference(ExpansionError):
    pass


class IncompleteMatching(ExpansionError):
    pass


# --- anonymization ---


class AnonymityError(NetveilError):
    exit_code = EXIT_INFEASIBLE


class Infeasible(AnonymityError):
    pass


class Unsatisfiable(AnonymityError):
    pass


class SolverTimeout(NetveilError):
    exit_code = EXIT_SOLVER_TIMEOUT

    def __init__(self, budget_ms: int, what: str = "solver"):
        super().__init__(f"{what} exceeded its {budget_ms} ms budget")
        self.budget_ms = budget_ms


# --- confgen ---


class ConfgenError(NetveilError):
    pass


class UnreachablePlan(ConfgenError):
    pass


class SubnetPoolExhausted(ConfgenError):
    pass


class IncompleteAssignment(ConfgenError):
    pass


# --- simulator ---


class SimulationError(NetveilError):
    pass


class SessionMismatch(SimulationError):
    pass


class NoRoute(SimulationError):
    pass


class LoopDetected(SimulationError):
    pass


# --- repair ---


class RepairError(NetveilError):
    pass


class PathNotInGraph(RepairError):
    pass


class Unsat(RepairError):
    pass


class NonConvergence(RepairError):
    def __init__(self, cap: int, remaining: int):
        super().__init__(f"inter-AS repair did not converge after {cap} iterations ({remaining} discrepancies left)")
        self.cap = cap
        self.remaining = remaining


class ConflictingRequirement(RepairError):
    pass


class VerificationFailed(NetveilError):
    exit_code = EXIT_VERIFICATION_FAILED
