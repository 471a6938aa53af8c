"""Computer and application profiles and their canonical XML form.

A computer profile splits node facts into a non-volatile part (OS, architecture,
memory, capacity in marks/s, installed libraries, hardware tags) and the most
recent volatile sample.  An application profile carries hash-keyed identity,
non-volatile requirements, a declared demand and the history of completed runs.

Serialization is canonical: fixed element order, sorted set members, reals
printed with exactly six fractional digits.  Values are therefore quantized to
1e-6 on write; profiles built from already-quantized values round-trip exactly.
"""

from __future__ import annotations

import hashlib
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional
from xml.sax.saxutils import escape

log = logging.getLogger(__name__)


class ProfileError(ValueError):
    pass


class MalformedXml(ProfileError):
    pass


class SchemaViolation(ProfileError):
    """A required element is missing or holds an out-of-range value."""

    def __init__(self, element: str, reason: str = "missing required element"):
        super().__init__(f"{element}: {reason}")
        self.element = element
        self.reason = reason


class EmptyField(ProfileError):
    pass


class StaleSample(ProfileError):
    pass


class IpcLevel(str, Enum):
    NONE = "none"
    LIGHT = "light"
    HEAVY = "heavy"


def _tags(values: Iterable[str], what: str) -> frozenset:
    values = list(values)
    out = frozenset(values)
    if len(out) != len(values):
        raise ValueError(f"duplicate entries in {what}")
    return out


@dataclass(frozen=True)
class NonVolatileFacts:
    os: str
    arch: str
    memory_mb: int
    capacity_marks_per_s: float
    libraries: frozenset = frozenset()
    hardware_features: frozenset = frozenset()

    def __post_init__(self):
        if self.memory_mb <= 0:
            raise ValueError("memory_mb must be positive")
        if not self.capacity_marks_per_s > 0:
            raise ValueError("capacity_marks_per_s must be positive")
        object.__setattr__(self, "libraries", _tags(self.libraries, "libraries"))
        object.__setattr__(
            self, "hardware_features", _tags(self.hardware_features, "hardware_features")
        )


@dataclass(frozen=True)
class VolatileSample:
    timestamp: float = 0.0
    cpu_busy_fraction: float = 0.0
    free_memory_mb: int = 0
    subscribed_marks: float = 0.0

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")
        if not 0.0 <= self.cpu_busy_fraction <= 1.0:
            raise ValueError("cpu_busy_fraction must lie in [0, 1]")
        if self.free_memory_mb < 0:
            raise ValueError("free_memory_mb must be non-negative")
        if self.subscribed_marks < 0:
            raise ValueError("subscribed_marks must be non-negative")


@dataclass(frozen=True)
class ComputerProfile:
    node_id: str
    nonvolatile: NonVolatileFacts
    volatile: VolatileSample = None

    def __post_init__(self):
        if not self.node_id:
            raise ValueError("node_id must be non-empty")
        if self.volatile is None:
            object.__setattr__(
                self, "volatile", VolatileSample(free_memory_mb=self.nonvolatile.memory_mb)
            )
        if self.volatile.free_memory_mb > self.nonvolatile.memory_mb:
            raise ValueError("free_memory_mb exceeds physical memory")


@dataclass(frozen=True)
class NonVolatileRequirements:
    """What an application needs from a node; ``None`` for os/arch means any."""

    os: Optional[str] = None
    arch: Optional[str] = None
    min_memory_mb: int = 0
    required_libraries: frozenset = frozenset()
    required_hardware: frozenset = frozenset()

    def __post_init__(self):
        if self.min_memory_mb < 0:
            raise ValueError("min_memory_mb must be non-negative")
        object.__setattr__(
            self, "required_libraries", _tags(self.required_libraries, "required_libraries")
        )
        object.__setattr__(
            self, "required_hardware", _tags(self.required_hardware, "required_hardware")
        )


@dataclass(frozen=True)
class RunRecord:
    demand_marks: float
    wall_time_s: float
    node_id: str
    timestamp: float

    def __post_init__(self):
        if not self.demand_marks > 0:
            raise ValueError("demand_marks must be positive")
        if not self.wall_time_s > 0:
            raise ValueError("wall_time_s must be positive")


@dataclass(frozen=True)
class ApplicationProfile:
    app_id: str
    declared_demand_marks: float
    requirements: NonVolatileRequirements = field(default_factory=NonVolatileRequirements)
    ipc_level: IpcLevel = IpcLevel.NONE
    history: tuple = ()

    def __post_init__(self):
        if not self.app_id:
            raise ValueError("app_id must be non-empty")
        if not self.declared_demand_marks > 0:
            raise ValueError("declared_demand_marks must be positive")
        object.__setattr__(self, "ipc_level", IpcLevel(self.ipc_level))
        history = tuple(self.history)
        if any(a.timestamp > b.timestamp for a, b in zip(history, history[1:])):
            raise ValueError("history must be ordered by timestamp")
        object.__setattr__(self, "history", history)


def compute_app_id(name: str, version: str) -> str:
    """Stable SHA-256 hex digest of ``name + "\\n" + version``."""
    if not name:
        raise EmptyField("name")
    if not version:
        raise EmptyField("version")
    return hashlib.sha256(f"{name}\n{version}".encode("utf-8")).hexdigest()


def update_volatile(p: ComputerProfile, s: VolatileSample) -> ComputerProfile:
    if s.timestamp < p.volatile.timestamp:
        raise StaleSample(
            f"sample at t={s.timestamp} older than current t={p.volatile.timestamp}"
        )
    return replace(p, volatile=s)


# --------------------------------------------------------------------------
# XML

def _fmt(x: float) -> str:
    return f"{x:.6f}"


class _Writer:
    def __init__(self):
        self.lines = ['<?xml version="1.0" encoding="utf-8"?>']
        self.depth = 0

    def leaf(self, tag, text):
        pad = "  " * self.depth
        self.lines.append(f"{pad}<{tag}>{escape(str(text))}</{tag}>")

    def empty(self, tag):
        self.lines.append("  " * self.depth + f"<{tag}/>")

    def open(self, tag):
        self.lines.append("  " * self.depth + f"<{tag}>")
        self.depth += 1

    def close(self, tag):
        self.depth -= 1
        self.lines.append("  " * self.depth + f"</{tag}>")

    def tag_list(self, tag, child, values):
        if not values:
            self.empty(tag)
            return
        self.open(tag)
        for v in sorted(values):
            self.leaf(child, v)
        self.close(tag)

    def text(self):
        return "\n".join(self.lines) + "\n"


def serialize_computer_profile(p: ComputerProfile) -> str:
    nv, v = p.nonvolatile, p.volatile
    w = _Writer()
    w.open("computerProfile")
    w.leaf("nodeId", p.node_id)
    w.open("nonVolatile")
    w.leaf("os", nv.os)
    w.leaf("arch", nv.arch)
    w.leaf("memoryMB", nv.memory_mb)
    w.leaf("capacityMarksPerS", _fmt(nv.capacity_marks_per_s))
    w.tag_list("libraries", "lib", nv.libraries)
    w.tag_list("hardware", "feature", nv.hardware_features)
    w.close("nonVolatile")
    w.open("volatile")
    w.leaf("timestamp", _fmt(v.timestamp))
    w.leaf("cpuBusyFraction", _fmt(v.cpu_busy_fraction))
    w.leaf("freeMemoryMB", v.free_memory_mb)
    w.leaf("subscribedMarks", _fmt(v.subscribed_marks))
    w.close("volatile")
    w.close("computerProfile")
    return w.text()


def serialize_application_profile(p: ApplicationProfile) -> str:
    r = p.requirements
    w = _Writer()
    w.open("applicationProfile")
    w.leaf("appId", p.app_id)
    w.leaf("ipcLevel", p.ipc_level.value)
    w.open("requirements")
    if r.os is not None:
        w.leaf("os", r.os)
    if r.arch is not None:
        w.leaf("arch", r.arch)
    w.leaf("minMemoryMB", r.min_memory_mb)
    w.tag_list("libraries", "lib", r.required_libraries)
    w.tag_list("hardware", "feature", r.required_hardware)
    w.close("requirements")
    w.leaf("declaredDemandMarks", _fmt(p.declared_demand_marks))
    if not p.history:
        w.empty("history")
    else:
        w.open("history")
        for rec in p.history:
            w.open("run")
            w.leaf("demandMarks", _fmt(rec.demand_marks))
            w.leaf("wallTimeS", _fmt(rec.wall_time_s))
            w.leaf("nodeId", rec.node_id)
            w.leaf("timestamp", _fmt(rec.timestamp))
            w.close("run")
        w.close("history")
    w.close("applicationProfile")
    return w.text()


class _Reader:
    """Walks a parsed element, tracking which children were consumed."""

    def __init__(self, elem: ET.Element, path: str):
        self.elem = elem
        self.path = path
        self.used: set[str] = set()

    def child(self, tag, required=True) -> Optional["_Reader"]:
        self.used.add(tag)
        found = self.elem.find(tag)
        if found is None:
            if required:
                raise SchemaViolation(tag)
            return None
        return _Reader(found, f"{self.path}/{tag}")

    def text(self, tag, required=True) -> Optional[str]:
        c = self.child(tag, required)
        if c is None:
            return None
        value = (c.elem.text or "").strip()
        if not value:
            raise SchemaViolation(tag, "empty value")
        return value

    def real(self, tag, required=True, positive=False, unit=False, default=None):
        raw = self.text(tag, required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise SchemaViolation(tag, f"not a number: {raw!r}") from None
        if not math.isfinite(value) or value < 0 or (positive and value == 0):
            raise SchemaViolation(tag, f"out of range: {raw}")
        if unit and value > 1:
            raise SchemaViolation(tag, f"out of range: {raw}")
        return value

    def integer(self, tag, required=True, positive=False, default=None):
        raw = self.text(tag, required)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise SchemaViolation(tag, f"not an integer: {raw!r}") from None
        if value < 0 or (positive and value == 0):
            raise SchemaViolation(tag, f"out of range: {raw}")
        return value

    def tag_list(self, tag, item):
        c = self.child(tag, required=False)
        if c is None:
            return frozenset()
        c.used.add(item)
        values = [(e.text or "").strip() for e in c.elem.findall(item)]
        if len(set(values)) != len(values):
            raise SchemaViolation(tag, "duplicate entries")
        c.warn_unknown()
        return frozenset(values)

    def warn_unknown(self):
        for e in self.elem:
            if e.tag not in self.used:
                log.warning("ignoring unknown element <%s> under %s", e.tag, self.path)


def _root(xml_text: str, expected: str) -> _Reader:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None
    if root.tag != expected:
        raise SchemaViolation(expected, f"unexpected root element <{root.tag}>")
    return _Reader(root, expected)


def parse_computer_profile(xml_text: str) -> ComputerProfile:
    root = _root(xml_text, "computerProfile")
    node_id = root.text("nodeId")
    nv = root.child("nonVolatile")
    memory = nv.integer("memoryMB", positive=True)
    facts = NonVolatileFacts(
        os=nv.text("os"),
        arch=nv.text("arch", required=False) or "unknown",
        memory_mb=memory,
        capacity_marks_per_s=nv.real("capacityMarksPerS", positive=True),
        libraries=nv.tag_list("libraries", "lib"),
        hardware_features=nv.tag_list("hardware", "feature"),
    )
    nv.warn_unknown()
    vol = root.child("volatile", required=False)
    if vol is None:
        sample = VolatileSample(free_memory_mb=memory)
    else:
        free = vol.integer("freeMemoryMB", required=False, default=memory)
        if free > memory:
            raise SchemaViolation("freeMemoryMB", f"exceeds memoryMB ({free} > {memory})")
        sample = VolatileSample(
            timestamp=vol.real("timestamp", required=False, default=0.0),
            cpu_busy_fraction=vol.real("cpuBusyFraction", required=False, unit=True, default=0.0),
            free_memory_mb=free,
            subscribed_marks=vol.real("subscribedMarks", required=False, default=0.0),
        )
        vol.warn_unknown()
    root.warn_unknown()
    return ComputerProfile(node_id, facts, sample)


def parse_application_profile(xml_text: str) -> ApplicationProfile:
    root = _root(xml_text, "applicationProfile")
    app_id = root.text("appId")
    ipc_raw = root.text("ipcLevel", required=False) or "none"
    try:
        ipc = IpcLevel(ipc_raw)
    except ValueError:
        raise SchemaViolation("ipcLevel", f"unknown level {ipc_raw!r}") from None
    req = root.child("requirements", required=False)
    if req is None:
        requirements = NonVolatileRequirements()
    else:
        requirements = NonVolatileRequirements(
            os=req.text("os", required=False),
            arch=req.text("arch", required=False),
            min_memory_mb=req.integer("minMemoryMB", required=False, default=0),
            required_libraries=req.tag_list("libraries", "lib"),
            required_hardware=req.tag_list("hardware", "feature"),
        )
        req.warn_unknown()
    declared = root.real("declaredDemandMarks", positive=True)
    history = []
    hist = root.child("history", required=False)
    if hist is not None:
        hist.used.add("run")
        for i, run in enumerate(hist.elem.findall("run")):
            r = _Reader(run, f"{hist.path}/run[{i}]")
            history.append(
                RunRecord(
                    demand_marks=r.real("demandMarks", positive=True),
                    wall_time_s=r.real("wallTimeS", positive=True),
                    node_id=r.text("nodeId"),
                    timestamp=r.real("timestamp"),
                )
            )
            r.warn_unknown()
        hist.warn_unknown()
        if any(a.timestamp > b.timestamp for a, b in zip(history, history[1:])):
            raise SchemaViolation("history", "runs not ordered by timestamp")
    root.warn_unknown()
    return ApplicationProfile(
        app_id=app_id,
        declared_demand_marks=declared,
        requirements=requirements,
        ipc_level=ipc,
        history=tuple(history),
    )


def parse_profile(xml_text: str):
    """Parse either profile kind, dispatching on the root element."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None
    if root.tag == "computerProfile":
        return parse_computer_profile(xml_text)
    if root.tag == "applicationProfile":
        return parse_application_profile(xml_text)
    raise SchemaViolation("computerProfile|applicationProfile", f"unexpected root <{root.tag}>")
