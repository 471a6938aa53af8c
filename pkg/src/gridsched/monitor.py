"""Three information tiers.

* Accounting: an append-only, totally ordered event log written only on
  admission, completion, rejection, deadline miss, integrity alert or policy
  update.  Persisted as JSON lines.
* Volatile state: periodic beacons carrying busy fraction and subscribed /
  unsubscribed marks to overlay neighbours.
* Integrity: a per-job watchdog flagging work far beyond the profiled demand.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

from .demand import DEFAULT_QUANTILE, estimate_demand
from .ledger import LoadLedger, unsubscribed
from .profiles import ApplicationProfile, VolatileSample

DEFAULT_BEACON_PERIOD_S = 5.0
DEFAULT_INTEGRITY_FACTOR = 2.0
BEACON_WINDOW_S = 60.0


class OutOfOrder(ValueError):
    pass


class EventKind(str, Enum):
    JOB_ADMITTED = "job_admitted"
    JOB_COMPLETED = "job_completed"
    JOB_MISSED_DEADLINE = "job_missed_deadline"
    JOB_REJECTED = "job_rejected"
    INTEGRITY_ALERT = "integrity_alert"
    POLICY_UPDATE = "policy_update"


@dataclass(frozen=True)
class AccountingEvent:
    timestamp: float
    kind: EventKind
    node_id: str
    job_id: Optional[str] = None
    payload: dict = field(default_factory=dict)
    seq: int = -1

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": EventKind(self.kind).value,
            "node_id": self.node_id,
            "job_id": self.job_id,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccountingEvent":
        return cls(
            timestamp=float(d["timestamp"]),
            kind=EventKind(d["kind"]),
            node_id=d["node_id"],
            job_id=d.get("job_id"),
            payload=dict(d.get("payload") or {}),
            seq=int(d.get("seq", -1)),
        )


class AccountingLog:
    """Single-writer append-only log; per-node streams must not go back in time."""

    def __init__(self):
        self._events: list[AccountingEvent] = []
        self._last: dict[str, float] = {}

    def append(self, e: AccountingEvent) -> AccountingEvent:
        last = self._last.get(e.node_id)
        if last is not None and e.timestamp < last:
            raise OutOfOrder(f"{e.node_id}: t={e.timestamp} after t={last}")
        stamped = AccountingEvent(
            e.timestamp, EventKind(e.kind), e.node_id, e.job_id, dict(e.payload), len(self._events)
        )
        self._events.append(stamped)
        self._last[e.node_id] = e.timestamp
        return stamped

    @property
    def events(self) -> tuple:
        return tuple(self._events)

    def __len__(self):
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self._events)

    @classmethod
    def from_jsonl(cls, text: str) -> "AccountingLog":
        log = cls()
        for line in text.splitlines():
            if line.strip():
                log.append(AccountingEvent.from_dict(json.loads(line)))
        return log


def append_event(log: AccountingLog, e: AccountingEvent) -> AccountingLog:
    log.append(e)
    return log


def sla_report(events, horizon: float = float("inf")) -> dict:
    """Per-app summary of accounting events stamped at or before ``horizon``.

    A job counts towards the on-time fraction once it has either completed or
    been flagged late; it is on time if it completed by its due time.
    """
    apps: dict[str, dict] = {}

    def slot(app_id):
        return apps.setdefault(
            app_id,
            {"admitted": set(), "rejected": 0, "finished": {}, "missed": set(), "turnaround": []},
        )

    for e in events:
        if e.timestamp > horizon:
            continue
        app_id = e.payload.get("app_id", "")
        kind = EventKind(e.kind)
        if kind is EventKind.JOB_ADMITTED:
            slot(app_id)["admitted"].add(e.job_id)
        elif kind is EventKind.JOB_REJECTED:
            slot(app_id)["rejected"] += 1
        elif kind is EventKind.JOB_COMPLETED:
            s = slot(app_id)
            on_time = e.payload["completion_time"] <= e.payload["due_time"]
            s["finished"][e.job_id] = on_time
            s["turnaround"].append(e.payload["completion_time"] - e.payload["submitted_at"])
        elif kind is EventKind.JOB_MISSED_DEADLINE:
            slot(app_id)["missed"].add(e.job_id)

    report = {}
    for app_id in sorted(apps):
        s = apps[app_id]
        settled = set(s["finished"]) | s["missed"]
        on_time = sum(1 for j, ok in s["finished"].items() if ok and j not in s["missed"])
        turn = s["turnaround"]
        report[app_id] = {
            "jobs": len(s["admitted"]),
            "completed": len(s["finished"]),
            "missed": len(s["missed"]),
            "on_time_fraction": on_time / len(settled) if settled else 0.0,
            "mean_turnaround_s": sum(turn) / len(turn) if turn else 0.0,
            "rejected": s["rejected"],
        }
    return report


SLA_COLUMNS = ("app_id", "jobs", "completed", "missed", "on_time_fraction",
               "mean_turnaround_s", "rejected")


def sla_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def sla_to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SLA_COLUMNS)
    for app_id, row in sorted(report.items()):
        w.writerow([app_id] + [row[c] for c in SLA_COLUMNS[1:]])
    return buf.getvalue()


@dataclass(frozen=True)
class NodeStateBeacon:
    node_id: str
    timestamp: float
    cpu_busy_fraction: float
    subscribed_marks: float
    unsubscribed_1min_marks: float

    def to_dict(self):
        return asdict(self)


def emit_beacon(ledger: LoadLedger, sample: VolatileSample, now: float) -> NodeStateBeacon:
    return NodeStateBeacon(
        node_id=ledger.node_id,
        timestamp=now,
        cpu_busy_fraction=sample.cpu_busy_fraction,
        subscribed_marks=ledger.subscribed_marks,
        unsubscribed_1min_marks=unsubscribed(ledger, BEACON_WINDOW_S),
    )


@dataclass(frozen=True)
class IntegrityAlert:
    node_id: str
    job_id: str
    observed_marks: float
    threshold_marks: float
    timestamp: float


@dataclass
class JobView:
    """What the watchdog can see of a running job."""

    job_id: str
    node_id: str
    consumed_marks: float
    alerted: bool = False


def integrity_check(
    job: JobView,
    profile: ApplicationProfile,
    now: float,
    factor: float = DEFAULT_INTEGRITY_FACTOR,
    q: float = DEFAULT_QUANTILE,
    safety_factor: float = 1.5,
) -> Optional[IntegrityAlert]:
    """Raise at most one alert per job once it overshoots ``factor`` x its booking."""
    if job.alerted:
        return None
    threshold = factor * estimate_demand(profile, q, safety_factor).booked_marks
    if job.consumed_marks > threshold:
        job.alerted = True
        return IntegrityAlert(job.node_id, job.job_id, job.consumed_marks, threshold, now)
    return None
