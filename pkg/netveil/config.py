"""Persistent config for netveil, stored at ~/.netveil/config.json"""

import json
import os
import sys
from pathlib import Path
from typing import TypedDict

CONFIG_DIR = Path.home() / ".netveil"
CONFIG_FILE = CONFIG_DIR / "config.json"

# Bundled GraphML corpus used when no reference directory is configured
BUNDLED_REFERENCE_DIR = Path(__file__).parent / "data" / "references"

# OSPF interface-cost ceiling and the first search bound tried by the solver
COST_MAX = 65535
DEFAULT_SEARCH_BOUND = 1000
DEFAULT_OSPF_COST = 1

DEFAULT_SOLVER_TIMEOUT_MS = 60_000
DEFAULT_INTERAS_CAP = 50

# Address pools for fabricated links (/30) and fake host LANs
LINK_POOL = "10.250.0.0/16"
HOST_POOL = "10.252.0.0/16"
ROUTER_ID_POOL = "10.251.0.0/16"

# degree-closeness, neighbor-overlap, same-AS, protocol-overlap
TEMPLATE_WEIGHTS = (0.3, 0.2, 0.3, 0.2)
# stanza, command, order
SIMILARITY_WEIGHTS = (0.2, 0.5, 0.3)

FFS_FIRE_PROBABILITY = 0.7
RCMH_ALPHA = 0.5
SBS_BRANCHING = 3

TRACE_MAX_HOPS = 64
TRACE_MAX_BRANCHES = 256

REPORT_SCHEMA = 1


class NetveilConfig(TypedDict, total=False):
    """Expected shape of the config dict."""

    reference_dir: str | None
    solver_timeout_ms: int | None
    interas_cap: int | None


DEFAULT_CONFIG: NetveilConfig = {
    "reference_dir": None,
    "solver_timeout_ms": None,
    "interas_cap": None,
}


def load_config() -> NetveilConfig:
    if CONFIG_FILE.exists():
        try:
            with open(CONFIG_FILE) as f:
                stored = json.load(f)
            return {**DEFAULT_CONFIG, **stored}
        except (json.JSONDecodeError, OSError) as e:
            print(f"Warning: could not read {CONFIG_FILE}: {e}", file=sys.stderr)
    return dict(DEFAULT_CONFIG)


def save_config(config: NetveilConfig) -> None:
    try:
        CONFIG_DIR.mkdir(parents=True, exist_ok=True)
        with open(CONFIG_FILE, "w") as f:
            json.dump(config, f, indent=2)
    except OSError as e:
        print(f"Warning: could not save {CONFIG_FILE}: {e}", file=sys.stderr)


def get_reference_dir() -> Path:
    """Get the reference topology directory.

    Priority:
    1. NETVEIL_REFERENCE_DIR environment variable
    2. reference_dir in config file
    3. the bundled GraphML corpus
    """
    env_dir = os.environ.get("NETVEIL_REFERENCE_DIR")
    if env_dir:
        return Path(env_dir)

    config = load_config()
    config_dir = config.get("reference_dir")
    if config_dir:
        return Path(config_dir)

    return BUNDLED_REFERENCE_DIR


def _int_setting(env_var: str, key: str, default: int) -> int:
    raw = os.environ.get(env_var)
    if raw:
        try:
            return int(raw)
        except ValueError:
            print(f"Warning: ignoring non-integer {env_var}={raw!r}", file=sys.stderr)

    value = load_config().get(key)
    if value:
        return int(value)
    return default


def get_solver_timeout_ms() -> int:
    """Solver budget per call (NETVEIL_SOLVER_TIMEOUT_MS > config > default)."""
    return _int_setting("NETVEIL_SOLVER_TIMEOUT_MS", "solver_timeout_ms", DEFAULT_SOLVER_TIMEOUT_MS)


def get_interas_cap() -> int:
    """Iteration cap for the inter-AS repair loop (NETVEIL_INTERAS_CAP > config > default)."""
    return _int_setting("NETVEIL_INTERAS_CAP", "interas_cap", DEFAULT_INTERAS_CAP)
