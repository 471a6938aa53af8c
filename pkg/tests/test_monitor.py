import random
from collections import defaultdict

import pytest

from gridsched.ledger import LoadLedger, admit
from gridsched.monitor import (
    AccountingEvent,
    AccountingLog,
    EventKind,
    JobView,
    OutOfOrder,
    append_event,
    emit_beacon,
    integrity_check,
    sla_report,
    sla_to_csv,
    sla_to_json,
)
from gridsched.profiles import ApplicationProfile, RunRecord, VolatileSample, compute_app_id

APP = compute_app_id("a", "1")


def ev(t, kind, job="j1", node="n", **payload):
    payload.setdefault("app_id", APP)
    return AccountingEvent(t, kind, node, job, payload)


def done(t, job, due, submitted=0.0):
    return ev(t, EventKind.JOB_COMPLETED, job, completion_time=t, due_time=due, submitted_at=submitted)


def test_append_orders_and_numbers():
    log = AccountingLog()
    append_event(log, ev(1.0, EventKind.JOB_ADMITTED))
    append_event(log, done(3.0, "j1", 5.0))
    assert [e.seq for e in log] == [0, 1]
    assert [e.kind for e in log] == [EventKind.JOB_ADMITTED, EventKind.JOB_COMPLETED]


def test_out_of_order_rejected_per_node():
    log = AccountingLog()
    log.append(ev(5.0, EventKind.JOB_ADMITTED))
    log.append(ev(1.0, EventKind.JOB_ADMITTED, node="other"))
    with pytest.raises(OutOfOrder):
        log.append(ev(4.0, EventKind.JOB_REJECTED))


def test_jsonl_round_trip():
    log = AccountingLog()
    log.append(ev(1.0, EventKind.JOB_ADMITTED, booked_marks=3.5))
    log.append(ev(2.0, EventKind.POLICY_UPDATE, job=None, rule="x"))
    again = AccountingLog.from_jsonl(log.to_jsonl())
    assert again.events == log.events
    assert again.to_jsonl() == log.to_jsonl()


def test_sla_empty():
    assert sla_report([]) == {}


def test_sla_three_on_time_one_missed():
    events = [done(float(i), f"j{i}", 10.0) for i in range(3)]
    events.append(ev(12.0, EventKind.JOB_MISSED_DEADLINE, "j3", due_time=10.0))
    assert sla_report(events)[APP]["on_time_fraction"] == 0.75
    # same fraction when the late job does complete eventually
    events.append(done(15.0, "j3", 10.0))
    assert sla_report(events)[APP]["on_time_fraction"] == 0.75


def independent_fold(events, horizon):
    per = defaultdict(lambda: {"adm": set(), "rej": 0, "ok": set(), "late": set(), "tt": [],
                               "fin": set()})
    for e in sorted(events, key=lambda e: e.timestamp):
        if e.timestamp > horizon:
            break
        s = per[e.payload["app_id"]]
        if e.kind == EventKind.JOB_ADMITTED:
            s["adm"].add(e.job_id)
        elif e.kind == EventKind.JOB_REJECTED:
            s["rej"] += 1
        elif e.kind == EventKind.JOB_MISSED_DEADLINE:
            s["late"].add(e.job_id)
        elif e.kind == EventKind.JOB_COMPLETED:
            s["fin"].add(e.job_id)
            s["tt"].append(e.payload["completion_time"] - e.payload["submitted_at"])
            if e.payload["completion_time"] <= e.payload["due_time"]:
                s["ok"].add(e.job_id)
    out = {}
    for app, s in per.items():
        denom = len(s["fin"] | s["late"])
        out[app] = (len(s["adm"]), s["rej"], len(s["ok"] - s["late"]) / denom if denom else 0.0,
                    sum(s["tt"]) / len(s["tt"]) if s["tt"] else 0.0)
    return out


def test_sla_matches_independent_fold():
    rng = random.Random(6)
    apps = [compute_app_id("a", str(v)) for v in range(3)]
    for trial in range(100):
        events = []
        t = 0.0
        for j in range(rng.randint(0, 25)):
            t += rng.uniform(0, 3)
            app = rng.choice(apps)
            sub = t
            if rng.random() < 0.2:
                events.append(ev(t, EventKind.JOB_REJECTED, f"j{j}", app_id=app))
                continue
            due = t + rng.uniform(1, 10)
            events.append(ev(t, EventKind.JOB_ADMITTED, f"j{j}", app_id=app))
            fin = t + rng.uniform(0.5, 12)
            if fin > due:
                events.append(ev(due, EventKind.JOB_MISSED_DEADLINE, f"j{j}", app_id=app))
            events.append(ev(fin, EventKind.JOB_COMPLETED, f"j{j}", app_id=app, completion_time=fin,
                             due_time=due, submitted_at=sub))
        horizon = rng.uniform(0, t + 15)
        got = sla_report(events, horizon)
        want = independent_fold(events, horizon)
        assert set(got) == set(want)
        for app, (jobs, rej, frac, tt) in want.items():
            g = got[app]
            assert (g["jobs"], g["rejected"]) == (jobs, rej)
            assert g["on_time_fraction"] == pytest.approx(frac)
            assert g["mean_turnaround_s"] == pytest.approx(tt)


def test_sla_formats():
    rep = sla_report([done(1.0, "j", 2.0)])
    assert APP in sla_to_json(rep)
    lines = sla_to_csv(rep).splitlines()
    assert lines[0].startswith("app_id,jobs")
    assert lines[1].startswith(APP)


def test_beacon_idle_and_full():
    idle = emit_beacon(LoadLedger("n", 100.0), VolatileSample(), 5.0)
    assert idle.cpu_busy_fraction == 0 and idle.unsubscribed_1min_marks == 6000
    full = admit(LoadLedger("n", 100.0), "j", "a", 6000, 60)
    b = emit_beacon(full, VolatileSample(5.0, 1.0), 5.0)
    assert b.unsubscribed_1min_marks == 0
    assert b.subscribed_marks == 6000


def profile(history):
    return ApplicationProfile(APP, 100.0, history=tuple(RunRecord(x, 1.0, "n", 0.0) for x in history))


def test_integrity_threshold():
    p = profile([100.0])
    assert integrity_check(JobView("j", "n", 150.0), p, 1.0) is None
    alert = integrity_check(JobView("j", "n", 201.0), p, 1.0)
    assert alert is not None and alert.threshold_marks == 200.0
    assert alert.observed_marks > alert.threshold_marks


def test_integrity_alerts_once():
    view = JobView("j", "n", 500.0)
    assert integrity_check(view, profile([100.0]), 1.0) is not None
    view.consumed_marks = 900.0
    assert integrity_check(view, profile([100.0]), 2.0) is None
