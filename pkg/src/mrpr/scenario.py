"""
Scenario configuration files.

A scenario is a TOML document; see ``docs/scenario_config.md`` for the full
grammar. Relative paths inside it (topology, drift profile) are resolved
against the directory of the scenario file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from mrpr.errors import ConfigError
from mrpr.estimator import NoiseSpec, load_drift_profile
from mrpr.reliability import REPACKING_MODES, Distribution, Exponential, Weibull
from mrpr.routing import POLICIES
from mrpr.topology import Topology, default_topology_text, load_topology

ROUTING_MODES = ("mrpr", "baseline")
DEFAULT_TOPOLOGY = "default"

_TOP_KEYS = {
    "seed", "requests", "arrival_rate", "mean_holding", "topology", "pairs", "routing",
    "converters", "wavelength_policy", "repacking", "warmup_fraction", "repair_time",
    "drift_profile", "noise", "failures",
}  # fmt: skip


@dataclass
class ScenarioConfig:
    seed: int
    requests: int = 1000
    arrival_rate: float = 1.0
    mean_holding: float = 1.0
    topology: str = DEFAULT_TOPOLOGY
    pairs: list[tuple[str, str]] | None = None
    routing: str = "mrpr"
    converters: bool = False
    wavelength_policy: str = "random"
    repacking: str = "ode"
    warmup_fraction: float = 0.1
    repair_time: float | None = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    link_failure: Distribution | None = None
    router_failure: Distribution | None = None
    overrides: dict[str, Distribution | None] = field(default_factory=dict)
    drift_profile: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.requests <= 0:
            raise ConfigError("requests must be positive")
        if not (self.arrival_rate > 0 and self.mean_holding > 0):
            raise ConfigError("arrival_rate and mean_holding must be positive")
        if self.routing not in ROUTING_MODES:
            raise ConfigError(f"routing must be one of {ROUTING_MODES}")
        if self.wavelength_policy not in POLICIES:
            raise ConfigError(f"wavelength_policy must be one of {POLICIES}")
        if self.repacking not in REPACKING_MODES:
            raise ConfigError(f"repacking must be one of {REPACKING_MODES}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must lie in [0, 1)")
        if self.repair_time is not None and not self.repair_time > 0:
            raise ConfigError("repair_time must be positive")

    @property
    def effective_repair_time(self) -> float:
        return self.mean_holding if self.repair_time is None else self.repair_time

    @property
    def warmup_requests(self) -> int:
        return int(self.warmup_fraction * self.requests)

    def topology_path(self) -> Path | None:
        if self.topology == DEFAULT_TOPOLOGY:
            return None
        return self.base_dir / self.topology

    def load_topology(self) -> Topology:
        path = self.topology_path()
        if path is None:
            text = default_topology_text()
        else:
            try:
                text = path.read_text("utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read topology file {path}: {exc.strerror}") from None
        topo = load_topology(text, self.converters)
        self._check_against(topo)
        return topo

    def _check_against(self, topo: Topology) -> None:
        nodes = set(topo.nodes)
        for s, d in self.resolved_pairs(topo):
            if s not in nodes or d not in nodes:
                raise ConfigError(f"traffic pair {s}-{d} names an unknown node")
        for name in self.overrides:
            if resource_id(name) not in nodes | set(topo.links):
                raise ConfigError(f"failure override {name!r} names no link or router")

    def resolved_pairs(self, topo: Topology) -> list[tuple[str, str]]:
        if self.pairs is not None:
            return list(self.pairs)
        return [(s, d) for s in topo.nodes for d in topo.nodes if s != d]

    def failure_for(self, resource) -> Distribution | None:
        name = resource_name(resource)
        if name in self.overrides:
            return self.overrides[name]
        return self.link_failure if isinstance(resource, tuple) else self.router_failure

    def drift_profiles(self) -> dict[str, dict[int, float]]:
        if self.drift_profile is None:
            return {}
        path = self.base_dir / self.drift_profile
        try:
            return load_drift_profile(path.read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read drift profile {path}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def resource_name(resource) -> str:
    return f"{resource[0]}-{resource[1]}" if isinstance(resource, tuple) else str(resource)


def resource_id(name: str):
    if "-" in name:
        a, b = name.split("-", 1)
        return (a, b)
    return name


def parse_distribution(spec: Any, where: str) -> Distribution | None:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a table with a 'dist' key")
    kind = spec.get("dist")
    try:
        if kind == "none":
            _only(spec, {"dist"}, where)
            return None
        if kind == "exponential":
            _only(spec, {"dist", "mean"}, where)
            return Exponential(float(spec["mean"]))
        if kind == "weibull":
            _only(spec, {"dist", "shape", "scale"}, where)
            return Weibull(float(spec["shape"]), float(spec["scale"]))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: dist must be 'none', 'exponential' or 'weibull'")


def _only(table: dict, allowed: set[str], where: str) -> None:
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _parse_pairs(value) -> list[tuple[str, str]] | None:
    if value == "all":
        return None
    if not isinstance(value, list):
        raise ConfigError("pairs must be \"all\" or a list of [source, destination]")
    pairs = []
    for item in value:
        if not (isinstance(item, list) and len(item) == 2 and item[0] != item[1]):
            raise ConfigError(f"bad traffic pair {item!r}")
        pairs.append((str(item[0]), str(item[1])))
    if not pairs:
        raise ConfigError("pairs must not be empty")
    return pairs


def parse_scenario(text: str, base_dir: Path | str = ".") -> ScenarioConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario syntax error: {exc}") from None
    _only(doc, _TOP_KEYS, "scenario")
    if "seed" not in doc:
        raise ConfigError("scenario must set 'seed'")

    kwargs: dict[str, Any] = {"base_dir": Path(base_dir)}
    for key in ("seed", "requests"):
        if key in doc:
            if not isinstance(doc[key], int):
                raise ConfigError(f"{key} must be an integer")
            kwargs[key] = doc[key]
    for key in ("arrival_rate", "mean_holding", "warmup_fraction", "repair_time"):
        if key in doc:
            if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
                raise ConfigError(f"{key} must be a number")
            kwargs[key] = float(doc[key])
    for key in ("topology", "routing", "wavelength_policy", "repacking", "drift_profile"):
        if key in doc:
            kwargs[key] = str(doc[key])
    if "converters" in doc:
        if not isinstance(doc["converters"], bool):
            raise ConfigError("converters must be true or false")
        kwargs["converters"] = doc["converters"]
    if "pairs" in doc:
        kwargs["pairs"] = _parse_pairs(doc["pairs"])

    if "noise" in doc:
        noise = doc["noise"]
        _only(noise, {"q", "r"}, "noise")
        try:
            kwargs["noise"] = NoiseSpec(q=float(noise.get("q", 0.0)), r=float(noise.get("r", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from None

    failures = doc.get("failures", {})
    _only(failures, {"links", "routers", "overrides"}, "failures")
    if "links" in failures:
        kwargs["link_failure"] = parse_distribution(failures["links"], "failures.links")
    if "routers" in failures:
        kwargs["router_failure"] = parse_distribution(failures["routers"], "failures.routers")
    kwargs["overrides"] = {
        str(name): parse_distribution(spec, f"failures.overrides.{name}")
        for name, spec in failures.get("overrides", {}).items()
    }
    return ScenarioConfig(**kwargs)


def load_scenario(path: Path | str) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return parse_scenario(text, path.parent)


def prior_failure_mean(dist: Distribution | None) -> float:
    return math.inf if dist is None else dist.mean
