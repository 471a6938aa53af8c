"""Deterministic discrete-event simulation of a self-scheduling grid.

One seeded ``random.Random`` drives everything (overlay far links, arrivals,
origins, hidden true demand, turnaround windows) and the event heap breaks
time ties by insertion sequence, so a scenario plus a seed fixes the whole run.

Jobs are placed by running discovery over real message events: the origin
evaluates itself, the query floods the overlay, bids travel back, and after the
collection timeout the origin picks a winner which then admits (or, on a lost
race, the runner-up gets one try).  Nodes execute their jobs either by fair
processor sharing, which is what a multitasking OS does, or deadline-first,
which is what the ledger's guarantee assumes.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from . import ledger as ldg
from .demand import estimate_demand, on_time_confidence, record_run
from .ledger import Bid, LoadLedger
from .monitor import (
    AccountingEvent,
    AccountingLog,
    EventKind,
    JobView,
    emit_beacon,
    integrity_check,
    sla_report,
)
from .profiles import ApplicationProfile, ComputerProfile, RunRecord, VolatileSample, update_volatile
from .scenario import ConfigError, Scenario
from .sord import (
    BidReply,
    Query,
    SordNode,
    build_overlay,
    handle_query,
    query_to_dict,
    rank_replies,
    reply_to_dict,
)

log = logging.getLogger(__name__)

# completion/deadline comparisons tolerate this much relative float error
TIME_TOL = 1e-9


class EventType:
    JOB_ARRIVAL = "job_arrival"
    JOB_COMPLETION_CHECK = "job_completion_check"
    MESSAGE_DELIVERY = "message_delivery"
    BEACON_TICK = "beacon_tick"
    VOLATILE_SAMPLE_TICK = "volatile_sample_tick"
    DISCOVERY_TIMEOUT = "discovery_timeout"


@dataclass(order=True)
class SimEvent:
    time: float
    seq: int
    kind: str = field(compare=False)
    data: dict = field(compare=False, default_factory=dict)


@dataclass
class Job:
    job_id: str
    app: str
    app_id: str
    origin: str
    submitted_at: float
    due_time: float
    true_demand_marks: float
    booked_marks: float = 0.0
    on_time_prob: float = 1.0
    node_id: Optional[str] = None
    admitted_at: float = 0.0
    admit_seq: int = 0
    consumed_marks: float = 0.0
    missed: bool = False
    view: Optional[JobView] = None

    @property
    def remaining(self) -> float:
        return self.true_demand_marks - self.consumed_marks


@dataclass
class NodeRuntime:
    profile: ComputerProfile
    ledger: LoadLedger
    execution_model: str = "edf"
    jobs: dict = field(default_factory=dict)
    clock: float = 0.0
    busy_time: float = 0.0
    busy_since_sample: float = 0.0
    consumed_total: float = 0.0
    seen: set = field(default_factory=set)
    beacons_sent: int = 0
    neighbor_beacons: dict = field(default_factory=dict)
    version: int = 0
    last_logged: float = 0.0

    @property
    def node_id(self) -> str:
        return self.profile.node_id

    @property
    def rate(self) -> float:
        return self.profile.nonvolatile.capacity_marks_per_s

    def _edf_order(self):
        return sorted(self.jobs.values(), key=lambda j: (j.due_time, j.admit_seq))

    def time_to_next_completion(self) -> Optional[float]:
        if not self.jobs:
            return None
        if self.execution_model == "edf":
            return self._edf_order()[0].remaining / self.rate
        n = len(self.jobs)
        return min(j.remaining for j in self.jobs.values()) * n / self.rate


def step_execution(node: NodeRuntime, dt: float):
    """Run ``node`` forward by ``dt`` seconds.

    Returns ``[(job, completion_time), ...]`` in completion order.  Under
    fair sharing, each of n running jobs gets rate/n and shares rebalance at
    the exact instant a job finishes.  Under edf, the earliest-due job gets
    the whole machine.  Consumption is mirrored into the node's ledger.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    done = []
    left = dt
    while left > 0 and node.jobs:
        if node.execution_model == "edf":
            active = node._edf_order()[:1]
            share = node.rate
        else:
            active = list(node.jobs.values())
            share = node.rate / len(active)
        first = min(j.remaining for j in active)
        to_finish = first / share
        if to_finish <= left * (1 + TIME_TOL):
            used = min(to_finish, left)
            finishing = [j for j in active if j.remaining <= first * (1 + 1e-12)]
        else:
            used = left
            finishing = []
        for j in active:
            marks = j.true_demand_marks - j.consumed_marks if j in finishing else share * used
            _credit(node, j, marks)
        node.clock += used
        node.busy_time += used
        node.busy_since_sample += used
        left -= used
        for j in finishing:
            j.consumed_marks = j.true_demand_marks
            del node.jobs[j.job_id]
            if node.ledger.get(j.job_id) is not None:
                node.ledger = ldg.retire(node.ledger, j.job_id)
            done.append((j, node.clock))
    if left > 0:
        node.clock += left
    return done


def _credit(node: NodeRuntime, job: Job, marks: float):
    job.consumed_marks += marks
    if job.view is not None:
        job.view.consumed_marks = job.consumed_marks
    node.consumed_total += marks
    if node.ledger.get(job.job_id) is not None:
        node.ledger, _ = ldg.consume(node.ledger, job.job_id, marks)


@dataclass
class RunReport:
    report: dict
    accounting: AccountingLog
    trace: list
    timeseries: list
    apps: dict

    def to_json(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True) + "\n"

    def accounting_jsonl(self) -> str:
        return self.accounting.to_jsonl()

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(t, sort_keys=True) + "\n" for t in self.trace)

    def timeseries_csv(self) -> str:
        lines = ["time,node_id,cpu_busy_fraction,subscribed_marks,running_jobs"]
        for row in self.timeseries:
            lines.append(
                f"{row['time']:.6f},{row['node_id']},{row['cpu_busy_fraction']:.6f},"
                f"{row['subscribed_marks']:.6f},{row['running_jobs']}"
            )
        return "\n".join(lines) + "\n"


class Simulation:
    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.sc = scenario
        self.rng = random.Random(scenario.seed)
        self.now = 0.0
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self.log = AccountingLog()
        self.trace: list[dict] = []
        self.timeseries: list[dict] = []
        self.counts = {
            "query_messages": 0,
            "reply_messages": 0,
            "beacon_messages": 0,
            "retries": 0,
        }

        ids = [n.node_id for n in scenario.nodes]
        try:
            self.overlay = build_overlay(
                ids, scenario.k_close, scenario.k_far, self.rng.getrandbits(32)
            )
        except ValueError as exc:
            raise ConfigError(f"overlay: {exc}") from None
        self.nodes = {
            p.node_id: NodeRuntime(
                profile=p,
                ledger=LoadLedger(p.node_id, p.nonvolatile.capacity_marks_per_s),
                execution_model=scenario.execution_model,
            )
            for p in scenario.nodes
        }
        self.apps: dict[str, ApplicationProfile] = {}
        self.app_specs = {a.name: a for a in scenario.workload.apps}
        for a in scenario.workload.apps:
            history = tuple(
                RunRecord(x, 1.0, "prior", 0.0) for x in a.history
            )
            self.apps[a.name] = ApplicationProfile(
                app_id=a.app_id,
                declared_demand_marks=a.declared_demand_marks,
                requirements=a.requirements,
                ipc_level=a.ipc_level,
                history=history,
            )
        self.jobs: dict[str, Job] = {}
        self.discoveries: dict[str, dict] = {}
        self._admit_seq = itertools.count()

    # ------------------------------------------------------------ scheduling

    def push(self, time: float, kind: str, **data):
        heapq.heappush(self._heap, SimEvent(time, next(self._seq), kind, data))

    def _generate_workload(self):
        sc, wl = self.sc, self.sc.workload
        node_ids = [n.node_id for n in sc.nodes]
        specs = []
        for j in wl.jobs:
            app = self.app_specs[j.app]
            specs.append(
                (
                    j.time,
                    j.app,
                    j.origin or self.rng.choice(node_ids),
                    j.true_demand_marks if j.true_demand_marks is not None
                    else app.true_demand.draw(self.rng),
                    j.turnaround_s if j.turnaround_s is not None
                    else self.rng.uniform(*app.turnaround_s),
                )
            )
        if wl.arrival_rate_per_s > 0:
            names = [a.name for a in wl.apps]
            weights = [a.weight for a in wl.apps]
            t = 0.0
            while True:
                t += self.rng.expovariate(wl.arrival_rate_per_s)
                if t >= sc.duration_s:
                    break
                name = self.rng.choices(names, weights)[0]
                app = self.app_specs[name]
                origin = self.rng.choice(node_ids)
                demand = app.true_demand.draw(self.rng)
                turnaround = self.rng.uniform(*app.turnaround_s)
                specs.append((t, name, origin, demand, turnaround))
        specs.sort(key=lambda s: s[0])
        if wl.max_jobs is not None:
            specs = specs[: wl.max_jobs]
        for i, (t, name, origin, demand, turnaround) in enumerate(specs):
            if t > sc.duration_s:
                continue
            self.push(
                t, EventType.JOB_ARRIVAL,
                job_id=f"job-{i:05d}", app=name, origin=origin,
                true_demand=demand, turnaround=turnaround,
            )

    def _schedule_ticks(self):
        for kind, period in (
            (EventType.VOLATILE_SAMPLE_TICK, self.sc.sample_period_s),
            (EventType.BEACON_TICK, self.sc.beacon_period_s),
        ):
            if period <= self.sc.duration_s:
                self.push(period, kind, k=1)

    def _next_tick(self, kind: str, period: float, k: int):
        t = (k + 1) * period
        if t <= self.sc.duration_s * (1 + TIME_TOL):
            self.push(t, kind, k=k + 1)

    # ----------------------------------------------------------- accounting

    def _account(self, node: NodeRuntime, t: float, kind: EventKind, job: Optional[Job], **payload):
        t = max(t, node.last_logged)
        node.last_logged = t
        if job is not None:
            payload.setdefault("app_id", job.app_id)
            payload.setdefault("due_time", job.due_time)
            payload.setdefault("submitted_at", job.submitted_at)
        self.log.append(
            AccountingEvent(t, kind, node.node_id, job.job_id if job else None, payload)
        )

    # -------------------------------------------------------------- nodes

    def sync(self, node: NodeRuntime, t: float):
        """Bring a node's execution, ledger clock and deadline flags up to ``t``."""
        if t > node.clock:
            before = set(node.jobs)
            finished = step_execution(node, t - node.clock)
            node.clock = t
            settled = []
            for job, tc in finished:
                if tc > job.due_time + TIME_TOL * max(1.0, job.due_time) and not job.missed:
                    settled.append((job.due_time, 0, job, None))
                settled.append((tc, 1, job, tc))
            for jid in before:
                job = self.jobs[jid]
                if jid in node.jobs and not job.missed and t > job.due_time + TIME_TOL * max(1.0, job.due_time):
                    settled.append((job.due_time, 0, job, None))
            settled.sort(key=lambda s: (s[0], s[1], s[2].job_id))
            for when, order, job, tc in settled:
                if order == 0:
                    job.missed = True
                    self._account(node, when, EventKind.JOB_MISSED_DEADLINE, job,
                                  remaining_marks=max(0.0, job.remaining))
                    self.trace.append({"t": when, "kind": "miss", "job_id": job.job_id,
                                       "node_id": node.node_id, "due_time": job.due_time})
                else:
                    self._complete(node, job, tc)
            if finished:
                self._reschedule(node)
        if t > node.ledger.now:
            node.ledger, _ = ldg.advance_time(node.ledger, t)

    def _complete(self, node: NodeRuntime, job: Job, tc: float):
        self._account(
            node, tc, EventKind.JOB_COMPLETED, job,
            completion_time=tc, actual_marks=job.true_demand_marks,
            booked_marks=job.booked_marks,
        )
        rec = RunRecord(job.true_demand_marks, max(tc - job.admitted_at, 1e-9), node.node_id, tc)
        self.apps[job.app] = record_run(self.apps[job.app], rec)
        self.trace.append({
            "t": tc, "kind": "completion", "job_id": job.job_id, "node_id": node.node_id,
            "true_demand_marks": job.true_demand_marks, "recorded_marks": rec.demand_marks,
            "due_time": job.due_time, "late": job.missed,
        })

    def _reschedule(self, node: NodeRuntime):
        node.version += 1
        ttc = node.time_to_next_completion()
        if ttc is not None:
            self.push(node.clock + ttc, EventType.JOB_COMPLETION_CHECK,
                      node_id=node.node_id, version=node.version)

    def _sord_node(self, node: NodeRuntime) -> SordNode:
        if self.sc.policy == "spot_load":
            def spot_bid(n: SordNode, q: Query) -> Bid:
                busy = node.profile.volatile.cpu_busy_fraction
                return Bid(n.node_id, q.window_s, (1.0 - busy) * node.rate * q.window_s, 1.0)

            return SordNode(node.node_id, node.profile.nonvolatile, node.ledger, node.seen,
                            bid_fn=spot_bid, gate_on_capacity=False)
        return SordNode(node.node_id, node.profile.nonvolatile, node.ledger, node.seen)

    # ------------------------------------------------------------ handlers

    def on_job_arrival(self, ev: SimEvent):
        d = ev.data
        app = self.apps[d["app"]]
        est = estimate_demand(app, self.sc.demand.quantile, self.sc.demand.safety_factor)
        job = Job(
            job_id=d["job_id"], app=d["app"], app_id=app.app_id, origin=d["origin"],
            submitted_at=ev.time, due_time=ev.time + d["turnaround"],
            true_demand_marks=d["true_demand"], booked_marks=est.booked_marks,
            on_time_prob=on_time_confidence(app, est.booked_marks,
                                            self.sc.demand.cold_start_confidence),
        )
        self.jobs[job.job_id] = job
        q = Query(
            query_id=job.job_id, origin=job.origin, requirements=app.requirements,
            demand_marks=job.booked_marks, window_s=d["turnaround"],
            ttl=self.sc.sord.ttl, min_confidence=self.sc.sord.min_confidence,
        )
        self.discoveries[job.job_id] = {"job": job, "replies": [], "open": True}
        self.trace.append({"t": ev.time, "kind": "arrival", "job_id": job.job_id,
                           "app": job.app, "origin": job.origin, "query": query_to_dict(q),
                           "true_demand_marks": job.true_demand_marks})
        self._deliver_query(ev.time, job.origin, q, hop_count=0, sender=None)
        self.push(ev.time + self.sc.sord.collect_timeout_s, EventType.DISCOVERY_TIMEOUT,
                  job_id=job.job_id)

    def _deliver_query(self, t, target, q, hop_count, sender):
        node = self.nodes[target]
        self.sync(node, t)
        reply, forwards = handle_query(
            self._sord_node(node), q, hop_count, sender, self.overlay.neighbors(target)
        )
        if reply is not None:
            if hop_count > 0:
                self.counts["reply_messages"] += 1
                self.push(t + hop_count * self.sc.sord.latency_s, EventType.MESSAGE_DELIVERY,
                          msg="reply", reply=reply, sender=target, target=q.origin)
            else:
                self._collect(reply)
        for f in forwards:
            self.counts["query_messages"] += 1
            self.push(t + self.sc.sord.latency_s, EventType.MESSAGE_DELIVERY,
                      msg="query", query=f.query, sender=f.sender, target=f.target,
                      hops=f.hop_count)

    def _collect(self, reply: BidReply):
        disc = self.discoveries.get(reply.query_id)
        if disc is not None and disc["open"]:
            disc["replies"].append(reply)

    def on_message(self, ev: SimEvent):
        d = ev.data
        if d["msg"] == "query":
            self.trace.append({"t": ev.time, "kind": "query", "query_id": d["query"].query_id,
                               "from": d["sender"], "to": d["target"], "ttl": d["query"].ttl,
                               "hops": d["hops"]})
            self._deliver_query(ev.time, d["target"], d["query"], d["hops"], d["sender"])
        elif d["msg"] == "reply":
            self.trace.append({"t": ev.time, "kind": "reply", "from": d["sender"],
                               "to": d["target"], **reply_to_dict(d["reply"])})
            self._collect(d["reply"])
        else:
            b = d["beacon"]
            self.nodes[d["target"]].neighbor_beacons[b.node_id] = b

    def on_discovery_timeout(self, ev: SimEvent):
        disc = self.discoveries.pop(ev.data["job_id"])
        disc["open"] = False
        job = disc["job"]
        ranked = rank_replies(disc["replies"])
        spot = self.sc.policy == "spot_load"
        for attempt, reply in enumerate(ranked[:2]):
            node = self.nodes[reply.bid.node_id]
            self.sync(node, ev.time)
            if attempt:
                self.counts["retries"] += 1
            try:
                node.ledger = ldg.admit(
                    node.ledger, job.job_id, job.app_id, job.booked_marks, job.due_time,
                    job.on_time_prob, check=not spot,
                )
            except (ldg.Rejected, ldg.PastDeadline) as exc:
                self.trace.append({"t": ev.time, "kind": "admission_race", "job_id": job.job_id,
                                   "node_id": node.node_id, "reason": str(exc)})
                continue
            job.node_id = node.node_id
            job.admitted_at = ev.time
            job.admit_seq = next(self._admit_seq)
            job.view = JobView(job.job_id, node.node_id, 0.0)
            node.jobs[job.job_id] = job
            self._account(node, ev.time, EventKind.JOB_ADMITTED, job,
                          booked_marks=job.booked_marks, on_time_prob=job.on_time_prob,
                          replies=len(ranked), attempt=attempt)
            self.trace.append({"t": ev.time, "kind": "placement", "job_id": job.job_id,
                               "node_id": node.node_id, "booked_marks": job.booked_marks,
                               "true_demand_marks": job.true_demand_marks})
            self._reschedule(node)
            return
        origin = self.nodes[job.origin]
        self.sync(origin, ev.time)
        reason = "no_eligible_node" if not ranked else "admission_failed"
        self._account(origin, ev.time, EventKind.JOB_REJECTED, job,
                      reason=reason, replies=len(ranked))
        self.trace.append({"t": ev.time, "kind": "rejection", "job_id": job.job_id,
                           "reason": reason})

    def on_completion_check(self, ev: SimEvent):
        node = self.nodes[ev.data["node_id"]]
        if ev.data["version"] != node.version:
            return
        self.sync(node, ev.time)
        if node.version == ev.data["version"] and node.jobs:
            # float residue left the job a hair short; look again
            self._reschedule(node)

    def on_sample_tick(self, ev: SimEvent):
        period = self.sc.sample_period_s
        for node in self.nodes.values():
            self.sync(node, ev.time)
            busy = min(1.0, node.busy_since_sample / period)
            node.busy_since_sample = 0.0
            used_mem = sum(self.apps[j.app].requirements.min_memory_mb for j in node.jobs.values())
            mem = node.profile.nonvolatile.memory_mb
            sample = sample_volatiles(ev.time, busy, max(0, mem - used_mem), node.ledger)
            node.profile = update_volatile(node.profile, sample)
            self.timeseries.append({
                "time": ev.time, "node_id": node.node_id, "cpu_busy_fraction": busy,
                "subscribed_marks": sample.subscribed_marks, "running_jobs": len(node.jobs),
            })
            for job in sorted(node.jobs.values(), key=lambda j: j.job_id):
                alert = integrity_check(
                    job.view, self.apps[job.app], ev.time, self.sc.integrity_factor,
                    self.sc.demand.quantile, self.sc.demand.safety_factor,
                )
                if alert is not None:
                    self._account(node, ev.time, EventKind.INTEGRITY_ALERT, job,
                                  observed_marks=alert.observed_marks,
                                  threshold_marks=alert.threshold_marks)
                    self.trace.append({"t": ev.time, "kind": "alert", "job_id": job.job_id,
                                       "node_id": node.node_id,
                                       "observed_marks": alert.observed_marks})
        self._next_tick(EventType.VOLATILE_SAMPLE_TICK, period, ev.data["k"])

    def on_beacon_tick(self, ev: SimEvent):
        for node in self.nodes.values():
            self.sync(node, ev.time)
            beacon = emit_beacon(node.ledger, node.profile.volatile, ev.time)
            node.beacons_sent += 1
            self.trace.append({"t": ev.time, "kind": "beacon", **beacon.to_dict()})
            for target in self.overlay.neighbors(node.node_id):
                self.counts["beacon_messages"] += 1
                self.push(ev.time + self.sc.sord.latency_s, EventType.MESSAGE_DELIVERY,
                          msg="beacon", beacon=beacon, sender=node.node_id, target=target)
        self._next_tick(EventType.BEACON_TICK, self.sc.beacon_period_s, ev.data["k"])

    # ---------------------------------------------------------------- run

    def run(self) -> RunReport:
        self._generate_workload()
        self._schedule_ticks()
        handlers = {
            EventType.JOB_ARRIVAL: self.on_job_arrival,
            EventType.MESSAGE_DELIVERY: self.on_message,
            EventType.DISCOVERY_TIMEOUT: self.on_discovery_timeout,
            EventType.JOB_COMPLETION_CHECK: self.on_completion_check,
            EventType.VOLATILE_SAMPLE_TICK: self.on_sample_tick,
            EventType.BEACON_TICK: self.on_beacon_tick,
        }
        end = self.sc.duration_s
        while self._heap and self._heap[0].time <= end * (1 + TIME_TOL):
            ev = heapq.heappop(self._heap)
            self.now = ev.time
            if ev.kind != EventType.MESSAGE_DELIVERY:
                self.trace.append({"t": ev.time, "seq": ev.seq, "kind": "event:" + ev.kind})
            handlers[ev.kind](ev)
        for node in self.nodes.values():
            self.sync(node, end)
        return self._report()

    def _report(self) -> RunReport:
        events = self.log.events
        count = {k: 0 for k in EventKind}
        for e in events:
            count[e.kind] += 1
        completed = count[EventKind.JOB_COMPLETED]
        misses = count[EventKind.JOB_MISSED_DEADLINE]
        late_done = sum(1 for j in self.jobs.values() if j.missed and j.node_id
                        and j.job_id not in self.nodes[j.node_id].jobs)
        settled = completed + misses - late_done
        on_time = completed - late_done
        duration = self.sc.duration_s
        metrics = {
            "jobs_submitted": len(self.jobs),
            "jobs_admitted": count[EventKind.JOB_ADMITTED],
            "jobs_rejected": count[EventKind.JOB_REJECTED],
            "jobs_completed": completed,
            "jobs_on_time": on_time,
            "deadline_misses": misses,
            "integrity_alerts": count[EventKind.INTEGRITY_ALERT],
            "miss_rate": misses / settled if settled else 0.0,
            "on_time_fraction": on_time / settled if settled else 0.0,
            "messages": dict(self.counts),
            "accounting_events": len(events),
        }
        per_node = []
        for node_id in sorted(self.nodes):
            n = self.nodes[node_id]
            per_node.append({
                "node_id": node_id,
                "rate": n.rate,
                "utilization": n.busy_time / duration,
                "busy_time_s": n.busy_time,
                "consumed_marks": n.consumed_total,
                "beacons_sent": n.beacons_sent,
                "running_at_end": len(n.jobs),
                "subscribed_marks_at_end": n.ledger.subscribed_marks,
            })
        apps = {}
        for name in sorted(self.apps):
            p = self.apps[name]
            est = estimate_demand(p, self.sc.demand.quantile, self.sc.demand.safety_factor)
            apps[name] = {
                "app_id": p.app_id,
                "runs": len(p.history),
                "booked_marks": est.booked_marks,
                "source": est.source.value,
            }
        accounting = self.log.to_jsonl()
        trace = "".join(json.dumps(t, sort_keys=True, default=str) + "\n" for t in self.trace)
        report = {
            "scenario": {
                "name": self.sc.name,
                "seed": self.sc.seed,
                "duration_s": duration,
                "policy": self.sc.policy,
                "execution_model": self.sc.execution_model,
                "nodes": len(self.nodes),
            },
            "metrics": metrics,
            "sla": sla_report(events),
            "per_node": per_node,
            "apps": apps,
            "digests": {
                "accounting_sha256": hashlib.sha256(accounting.encode()).hexdigest(),
                "trace_sha256": hashlib.sha256(trace.encode()).hexdigest(),
            },
        }
        return RunReport(report, self.log, self.trace, self.timeseries, dict(self.apps))


def sample_volatiles(now: float, busy_fraction: float, free_memory_mb: int,
                     ledger: LoadLedger) -> VolatileSample:
    return VolatileSample(
        timestamp=now,
        cpu_busy_fraction=busy_fraction,
        free_memory_mb=free_memory_mb,
        subscribed_marks=ledger.subscribed_marks,
    )


def run(scenario: Scenario) -> RunReport:
    return Simulation(scenario).run()
