"""Scenario documents: JSON in, validated dataclasses out."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .demand import DemandConfig
from .monitor import DEFAULT_BEACON_PERIOD_S, DEFAULT_INTEGRITY_FACTOR
from .profiles import (
    ComputerProfile,
    IpcLevel,
    NonVolatileFacts,
    NonVolatileRequirements,
    ProfileError,
    VolatileSample,
    compute_app_id,
    parse_computer_profile,
)
from .sord import DEFAULT_COLLECT_TIMEOUT_S, DEFAULT_LATENCY_S, DEFAULT_TTL_MAX

POLICIES = ("subscribed_load", "spot_load")
EXECUTION_MODELS = ("fair_share", "edf")
DISTRIBUTIONS = ("constant", "lognormal", "uniform")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DemandDistribution:
    """True (hidden) per-job demand in marks."""

    dist: str = "constant"
    value: float = 0.0
    median: float = 0.0
    sigma: float = 0.0
    low: float = 0.0
    high: float = 0.0

    def draw(self, rng) -> float:
        if self.dist == "constant":
            return self.value
        if self.dist == "lognormal":
            return self.median * math.exp(rng.gauss(0.0, self.sigma))
        return rng.uniform(self.low, self.high)


@dataclass(frozen=True)
class AppSpec:
    name: str
    version: str
    declared_demand_marks: float
    true_demand: DemandDistribution
    turnaround_s: tuple  # (low, high); equal bounds mean a fixed window
    requirements: NonVolatileRequirements = NonVolatileRequirements()
    ipc_level: IpcLevel = IpcLevel.NONE
    weight: float = 1.0
    history: tuple = ()  # pre-recorded demand marks

    @property
    def app_id(self) -> str:
        return compute_app_id(self.name, self.version)


@dataclass(frozen=True)
class JobSpec:
    time: float
    app: str
    origin: Optional[str] = None
    true_demand_marks: Optional[float] = None
    turnaround_s: Optional[float] = None


@dataclass(frozen=True)
class Workload:
    apps: tuple = ()
    arrival_rate_per_s: float = 0.0
    jobs: tuple = ()
    max_jobs: Optional[int] = None


@dataclass(frozen=True)
class SordConfig:
    ttl: int = DEFAULT_TTL_MAX
    ttl_max: int = DEFAULT_TTL_MAX
    latency_s: float = DEFAULT_LATENCY_S
    collect_timeout_s: float = DEFAULT_COLLECT_TIMEOUT_S
    min_confidence: float = 0.0


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration_s: float
    nodes: tuple
    workload: Workload
    policy: str = "subscribed_load"
    execution_model: str = "edf"
    k_close: int = 2
    k_far: int = 1
    sord: SordConfig = SordConfig()
    demand: DemandConfig = DemandConfig()
    beacon_period_s: float = DEFAULT_BEACON_PERIOD_S
    integrity_factor: float = DEFAULT_INTEGRITY_FACTOR
    sample_period_s: float = 5.0
    name: str = ""

    def with_overrides(self, seed=None, policy=None, execution_model=None) -> "Scenario":
        s = self
        if seed is not None:
            if int(seed) < 0:
                raise ConfigError("seed override must be a non-negative integer")
            s = replace(s, seed=int(seed))
        if policy is not None:
            s = replace(s, policy=policy)
        if execution_model is not None:
            s = replace(s, execution_model=execution_model)
        s.validate()
        return s

    def validate(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"policy: expected one of {POLICIES}, got {self.policy!r}")
        if self.execution_model not in EXECUTION_MODELS:
            raise ConfigError(
                f"execution_model: expected one of {EXECUTION_MODELS}, got {self.execution_model!r}"
            )
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if not self.nodes:
            raise ConfigError("nodes: at least one node is required")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("nodes: node_id values must be unique")
        if self.sord.ttl > self.sord.ttl_max:
            raise ConfigError(f"sord.ttl={self.sord.ttl} exceeds sord.ttl_max={self.sord.ttl_max}")
        for key in ("beacon_period_s", "sample_period_s"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        names = {a.name for a in self.workload.apps}
        for j in self.workload.jobs:
            if j.app not in names:
                raise ConfigError(f"workload.jobs: unknown app {j.app!r}")
            if j.origin is not None and j.origin not in ids:
                raise ConfigError(f"workload.jobs: unknown origin {j.origin!r}")
        if self.workload.arrival_rate_per_s > 0 and not self.workload.apps:
            raise ConfigError("workload.arrivals needs at least one app")


def _get(d: dict, key: str, kind, where: str, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    value = d[key]
    try:
        if kind is float:
            value = float(value)
            if not math.isfinite(value):
                raise ValueError
        elif kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            value = int(value)
        elif kind is str:
            if not isinstance(value, str):
                raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {value!r}") from None
    return value


def _requirements(d: Optional[dict], where: str) -> NonVolatileRequirements:
    d = d or {}
    try:
        return NonVolatileRequirements(
            os=d.get("os"),
            arch=d.get("arch"),
            min_memory_mb=_get(d, "min_memory_mb", int, where, 0),
            required_libraries=d.get("libraries", ()),
            required_hardware=d.get("hardware", ()),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _node(d: dict, i: int, base: Optional[Path]) -> ComputerProfile:
    where = f"nodes[{i}]"
    if "profile" in d:
        path = Path(d["profile"])
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            return parse_computer_profile(path.read_text())
        except (OSError, ProfileError) as exc:
            raise ConfigError(f"{where}.profile: {exc}") from None
    try:
        memory = _get(d, "memory_mb", int, where, 4096)
        facts = NonVolatileFacts(
            os=_get(d, "os", str, where, "linux"),
            arch=_get(d, "arch", str, where, "x86"),
            memory_mb=memory,
            capacity_marks_per_s=_get(d, "capacity_marks_per_s", float, where),
            libraries=d.get("libraries", ()),
            hardware_features=d.get("hardware", ()),
        )
        return ComputerProfile(
            _get(d, "node_id", str, where), facts, VolatileSample(free_memory_mb=memory)
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def _distribution(d, where: str) -> DemandDistribution:
    if isinstance(d, (int, float)):
        d = {"dist": "constant", "value": d}
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected object or number")
    dist = d.get("dist", "constant")
    if dist not in DISTRIBUTIONS:
        raise ConfigError(f"{where}.dist: expected one of {DISTRIBUTIONS}, got {dist!r}")
    if dist == "constant":
        out = DemandDistribution(dist, value=_get(d, "value", float, where))
        ok = out.value > 0
    elif dist == "lognormal":
        out = DemandDistribution(dist, median=_get(d, "median", float, where),
                                 sigma=_get(d, "sigma", float, where))
        ok = out.median > 0 and out.sigma >= 0
    else:
        out = DemandDistribution(dist, low=_get(d, "low", float, where),
                                 high=_get(d, "high", float, where))
        ok = 0 < out.low <= out.high
    if not ok:
        raise ConfigError(f"{where}: parameters out of range")
    return out


def _app(d: dict, i: int) -> AppSpec:
    where = f"workload.apps[{i}]"
    declared = _get(d, "declared_demand_marks", float, where)
    if declared <= 0:
        raise ConfigError(f"{where}.declared_demand_marks: must be positive")
    turn = d.get("turnaround_s")
    if isinstance(turn, (int, float)):
        turn = (float(turn), float(turn))
    elif isinstance(turn, (list, tuple)) and len(turn) == 2:
        turn = (float(turn[0]), float(turn[1]))
    else:
        raise ConfigError(f"{where}.turnaround_s: expected number or [low, high]")
    if not 0 < turn[0] <= turn[1]:
        raise ConfigError(f"{where}.turnaround_s: need 0 < low <= high")
    history = tuple(float(x) for x in d.get("history", ()))
    if any(x <= 0 for x in history):
        raise ConfigError(f"{where}.history: demand marks must be positive")
    try:
        ipc = IpcLevel(d.get("ipc_level", "none"))
    except ValueError:
        raise ConfigError(f"{where}.ipc_level: unknown level") from None
    return AppSpec(
        name=_get(d, "name", str, where),
        version=str(d.get("version", "1")),
        declared_demand_marks=declared,
        true_demand=_distribution(d.get("true_demand", declared), f"{where}.true_demand"),
        turnaround_s=turn,
        requirements=_requirements(d.get("requirements"), f"{where}.requirements"),
        ipc_level=ipc,
        weight=_get(d, "weight", float, where, 1.0),
        history=history,
    )


def _job(d: dict, i: int) -> JobSpec:
    where = f"workload.jobs[{i}]"
    tdm = d.get("true_demand_marks")
    turn = d.get("turnaround_s")
    return JobSpec(
        time=_get(d, "time", float, where),
        app=_get(d, "app", str, where),
        origin=d.get("origin"),
        true_demand_marks=None if tdm is None else float(tdm),
        turnaround_s=None if turn is None else float(turn),
    )


def scenario_from_dict(data: dict, base: Optional[Path] = None) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario: expected a JSON object")
    overlay = data.get("overlay", {})
    sord = data.get("sord", {})
    demand = data.get("demand", {})
    mon = data.get("monitor", {})
    sim = data.get("sim", {})
    wl = data.get("workload", {})
    arrivals = wl.get("arrivals") or {}
    if arrivals and arrivals.get("process", "poisson") != "poisson":
        raise ConfigError("workload.arrivals.process: only 'poisson' is supported")
    try:
        demand_cfg = DemandConfig(
            quantile=_get(demand, "quantile", float, "demand", 0.9),
            safety_factor=_get(demand, "safety_factor", float, "demand", 1.5),
            cold_start_confidence=_get(demand, "cold_start_confidence", float, "demand", 0.5),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"demand: {exc}") from None
    ttl_max = _get(sord, "ttl_max", int, "sord", DEFAULT_TTL_MAX)
    max_jobs = wl.get("max_jobs")
    scenario = Scenario(
        seed=_get(data, "seed", int, "scenario", 0),
        duration_s=_get(data, "duration_s", float, "scenario"),
        nodes=tuple(_node(n, i, base) for i, n in enumerate(data.get("nodes", []))),
        workload=Workload(
            apps=tuple(_app(a, i) for i, a in enumerate(wl.get("apps", []))),
            arrival_rate_per_s=_get(arrivals, "rate_per_s", float, "workload.arrivals", 0.0),
            jobs=tuple(_job(j, i) for i, j in enumerate(wl.get("jobs", []))),
            max_jobs=None if max_jobs is None else int(max_jobs),
        ),
        policy=data.get("policy", "subscribed_load"),
        execution_model=data.get("execution_model", "edf"),
        k_close=_get(overlay, "k_close", int, "overlay", 2),
        k_far=_get(overlay, "k_far", int, "overlay", 1),
        sord=SordConfig(
            ttl=_get(sord, "ttl", int, "sord", ttl_max),
            ttl_max=ttl_max,
            latency_s=_get(sord, "latency_s", float, "sord", DEFAULT_LATENCY_S),
            collect_timeout_s=_get(sord, "collect_timeout_s", float, "sord",
                                   DEFAULT_COLLECT_TIMEOUT_S),
            min_confidence=_get(sord, "min_confidence", float, "sord", 0.0),
        ),
        demand=demand_cfg,
        beacon_period_s=_get(mon, "beacon_period_s", float, "monitor", DEFAULT_BEACON_PERIOD_S),
        integrity_factor=_get(mon, "integrity_factor", float, "monitor",
                              DEFAULT_INTEGRITY_FACTOR),
        sample_period_s=_get(sim, "sample_period_s", float, "sim", 5.0),
        name=str(data.get("name", "")),
    )
    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return scenario_from_dict(data, base=path.parent)
