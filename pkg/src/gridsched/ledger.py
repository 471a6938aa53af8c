"""Per-node subscribed-load ledger.

A node does not advertise its spot CPU load.  It keeps a log of commitments,
each the marks still owed to a job and the absolute time they are due by, and
answers capacity questions from that log.  Feasibility is the single-machine
processor-demand test: for every due time ``d`` at or after ``now``, the marks
owed by ``d`` must fit into ``rate * (d - now)``.  That test is exact for
deadline-ordered preemptive execution, so a ledger that only ever grows through
``admit`` never misses a deadline when bookings cover true demand.

Ledgers are immutable; every mutating operation returns a new ledger.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional


class LedgerError(ValueError):
    pass


class DuplicateJobId(LedgerError):
    pass


class PastDeadline(LedgerError):
    pass


class UnknownJob(LedgerError, KeyError):
    pass


class TimeRegression(LedgerError):
    pass


class Rejected(Exception):
    """Admission refused; the ledger is left unchanged."""

    def __init__(self, reason: str = "insufficient_capacity"):
        super().__init__(reason)
        self.reason = reason


# absolute slack per unit rate absorbed by feasibility comparisons
SLACK = 1e-9


@dataclass(frozen=True)
class Commitment:
    job_id: str
    app_id: str
    remaining_marks: float
    due_time: float
    booked_marks: float
    on_time_prob: float = 1.0
    late: bool = False


@dataclass(frozen=True)
class Bid:
    node_id: str
    window_s: float
    unsubscribed_marks: float
    confidence: float


@dataclass(frozen=True)
class LoadLedger:
    node_id: str
    rate: float
    now: float = 0.0
    commitments: tuple = ()

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    @property
    def subscribed_marks(self) -> float:
        return sum(c.remaining_marks for c in self.commitments)

    def get(self, job_id: str) -> Optional[Commitment]:
        for c in self.commitments:
            if c.job_id == job_id:
                return c
        return None

    def demand(self, d: float) -> float:
        """Marks still owed by commitments due at or before ``d``."""
        return sum(c.remaining_marks for c in self.commitments if c.due_time <= d)


def _slack_ok(capacity: float, demand: float, rate: float) -> bool:
    return capacity - demand >= -SLACK * rate


def is_feasible(ledger: LoadLedger) -> bool:
    # Overdue commitments still owe work; their deadlines are already lost
    # and are not checked, but the work counts against every later deadline.
    for d in sorted({c.due_time for c in ledger.commitments}):
        if d < ledger.now:
            continue
        if not _slack_ok(ledger.rate * (d - ledger.now), ledger.demand(d), ledger.rate):
            return False
    return True


def admit(
    ledger: LoadLedger,
    job_id: str,
    app_id: str,
    booked_marks: float,
    due_time: float,
    on_time_prob: float = 1.0,
    check: bool = True,
) -> LoadLedger:
    """Add a commitment if the ledger stays feasible, else raise ``Rejected``.

    ``check=False`` skips the feasibility test; only the spot-load baseline
    uses it, to book work it admitted unconditionally.
    """
    if not booked_marks > 0:
        raise ValueError("booked_marks must be positive")
    if not 0.0 <= on_time_prob <= 1.0:
        raise ValueError("on_time_prob must lie in [0, 1]")
    if due_time <= ledger.now:
        raise PastDeadline(f"{job_id}: due {due_time} not after now {ledger.now}")
    if ledger.get(job_id) is not None:
        raise DuplicateJobId(job_id)
    c = Commitment(job_id, app_id, booked_marks, due_time, booked_marks, on_time_prob)
    out = replace(ledger, commitments=ledger.commitments + (c,))
    if check and not is_feasible(out):
        raise Rejected()
    return out


def unsubscribed(ledger: LoadLedger, window_s: float) -> float:
    """Largest extra marks due at ``now + window_s`` the ledger can absorb."""
    if not window_s > 0:
        raise ValueError("window_s must be positive")
    if not is_feasible(ledger):
        return 0.0
    horizon = ledger.now + window_s
    points = [horizon] + [c.due_time for c in ledger.commitments if c.due_time >= horizon]
    slack = min(ledger.rate * (d - ledger.now) - ledger.demand(d) for d in points)
    return min(max(0.0, slack), ledger.rate * window_s)


def make_bid(ledger: LoadLedger, window_s: float) -> Bid:
    confidence = math.prod(c.on_time_prob for c in ledger.commitments)
    return Bid(ledger.node_id, window_s, unsubscribed(ledger, window_s), confidence)


def consume(ledger: LoadLedger, job_id: str, marks: float):
    """Debit ``marks`` from a commitment.

    Returns ``(ledger, retired)``; ``retired`` is true when the commitment
    reached zero and was removed.
    """
    c = ledger.get(job_id)
    if c is None:
        raise UnknownJob(job_id)
    remaining = max(0.0, c.remaining_marks - marks)
    if remaining <= 0.0:
        kept = tuple(x for x in ledger.commitments if x.job_id != job_id)
        return replace(ledger, commitments=kept), True
    updated = tuple(
        replace(x, remaining_marks=remaining) if x.job_id == job_id else x
        for x in ledger.commitments
    )
    return replace(ledger, commitments=updated), False


def retire(ledger: LoadLedger, job_id: str) -> LoadLedger:
    """Drop a commitment whose job finished before its booking ran out."""
    if ledger.get(job_id) is None:
        raise UnknownJob(job_id)
    return replace(
        ledger, commitments=tuple(c for c in ledger.commitments if c.job_id != job_id)
    )


def advance_time(ledger: LoadLedger, t: float):
    """Move the ledger clock to ``t``; returns ``(ledger, newly_missed_job_ids)``.

    Unfinished commitments whose due time has passed are marked late and kept,
    since their remaining work still occupies the machine.
    """
    if t < ledger.now:
        raise TimeRegression(f"{t} < {ledger.now}")
    missed = []
    updated = []
    for c in ledger.commitments:
        if not c.late and c.due_time < t and c.remaining_marks > 0:
            missed.append(c.job_id)
            c = replace(c, late=True)
        updated.append(c)
    return replace(ledger, now=t, commitments=tuple(updated)), missed


def ledger_to_dict(ledger: LoadLedger) -> dict:
    return {
        "node_id": ledger.node_id,
        "now": ledger.now,
        "rate": ledger.rate,
        "commitments": [asdict(c) for c in ledger.commitments],
    }


def ledger_from_dict(data: dict) -> LoadLedger:
    return LoadLedger(
        node_id=data["node_id"],
        rate=float(data["rate"]),
        now=float(data["now"]),
        commitments=tuple(Commitment(**c) for c in data["commitments"]),
    )


def ledger_to_json(ledger: LoadLedger) -> str:
    return json.dumps(ledger_to_dict(ledger), sort_keys=True)


def ledger_from_json(text: str) -> LoadLedger:
    return ledger_from_dict(json.loads(text))
