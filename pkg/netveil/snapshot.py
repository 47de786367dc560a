"""Network snapshots: a directory of router configs plus host descriptors.

Layout::

    <snapshot>/configs/*.cfg
    <snapshot>/hosts/*.json
"""

from __future__ import annotations

import logging
from pathlib import Path

from pydantic import BaseModel, Field

from .errors import DuplicateHostname, MalformedHost, NetveilError
from .parsers.cisco import parse_config, render_config
from .parsers.host import dump_host, parse_host
from .parsers.schema import HostSpec, RouterConfig

logger = logging.getLogger(__name__)


class NetworkSnapshot(BaseModel):
    """Parsed configurations and hosts of one network."""

    configs: dict[str, RouterConfig] = Field(default_factory=dict, description="hostname -> config")
    hosts: dict[str, HostSpec] = Field(default_factory=dict, description="host name -> descriptor")
    sources: dict[str, str] = Field(
        default_factory=dict, description="hostname -> config file name it was read from"
    )

    @property
    def routers(self) -> list[str]:
        return sorted(self.configs)

    @property
    def host_names(self) -> list[str]:
        return sorted(self.hosts)

    def copy_deep(self) -> NetworkSnapshot:
        return self.model_copy(deep=True)

    def add_config(self, cfg: RouterConfig) -> None:
        if cfg.hostname in self.configs:
            raise DuplicateHostname(f"hostname {cfg.hostname!r} used twice")
        self.configs[cfg.hostname] = cfg

    def hosts_on(self, router: str) -> list[HostSpec]:
        return [self.hosts[h] for h in self.host_names if self.hosts[h].gateway_router == router]


def load_snapshot(path: Path | str) -> NetworkSnapshot:
    """Read a snapshot directory.

    Raises:
        FileNotFoundError: the directory has no ``configs`` sub-directory
        NetveilError: any parse error, annotated with the offending file
    """
    root = Path(path)
    config_dir = root / "configs"
    if not config_dir.is_dir():
        raise FileNotFoundError(f"No configs directory in {root}")

    snapshot = NetworkSnapshot()
    for file in sorted(config_dir.glob("*.cfg")):
        try:
            cfg = parse_config(file.read_text(encoding="utf-8"))
        except NetveilError as e:
            e.args = (f"{file.name}: {e}",)
            raise
        snapshot.add_config(cfg)
        snapshot.sources[cfg.hostname] = file.name

    host_dir = root / "hosts"
    if host_dir.is_dir():
        for file in sorted(host_dir.glob("*.json")):
            try:
                host = parse_host(file.read_text(encoding="utf-8"))
            except MalformedHost as e:
                raise MalformedHost(f"{file.name}: {e}") from e
            if host.hostname in snapshot.hosts or host.hostname in snapshot.configs:
                raise MalformedHost(f"{file.name}: name {host.hostname!r} already used")
            snapshot.hosts[host.hostname] = host

    logger.info(f"Loaded {len(snapshot.configs)} routers and {len(snapshot.hosts)} hosts from {root}")
    return snapshot


def write_snapshot(snapshot: NetworkSnapshot, path: Path | str) -> None:
    """Write a snapshot in the same layout it is read from."""
    root = Path(path)
    config_dir = root / "configs"
    host_dir = root / "hosts"
    config_dir.mkdir(parents=True, exist_ok=True)
    host_dir.mkdir(parents=True, exist_ok=True)

    for name in snapshot.routers:
        file_name = snapshot.sources.get(name, f"{name}.cfg")
        (config_dir / file_name).write_text(render_config(snapshot.configs[name]), encoding="utf-8")
    for name in snapshot.host_names:
        (host_dir / f"{name}.json").write_text(dump_host(snapshot.hosts[name]), encoding="utf-8")
    logger.info(f"Wrote {len(snapshot.configs)} configs and {len(snapshot.hosts)} hosts to {root}")
