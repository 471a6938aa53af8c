import math
import random
from statistics import NormalDist

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridsched.demand import (
    EstimateSource,
    InvalidQuantile,
    estimate_demand,
    on_time_confidence,
    record_run,
)
from gridsched.profiles import (
    ApplicationProfile,
    RunRecord,
    compute_app_id,
    parse_application_profile,
    serialize_application_profile,
)

from oracles import empirical_quantile


def app(history=(), declared=200.0):
    recs = tuple(RunRecord(float(x), 1.0, "n", float(i)) for i, x in enumerate(history))
    return ApplicationProfile(compute_app_id("app", "1"), declared, history=recs)


def test_record_run_appends_in_order():
    p = app()
    for i, x in enumerate([5.0, 7.0, 6.0]):
        p = record_run(p, RunRecord(x, 1.0, "n", float(i)))
    assert [r.demand_marks for r in p.history] == [5.0, 7.0, 6.0]
    assert p.declared_demand_marks == 200.0
    assert parse_application_profile(serialize_application_profile(p)) == p


def test_cold_start_uses_safety_margin():
    est = estimate_demand(app(declared=200.0))
    assert est.booked_marks == 300.0
    assert est.source is EstimateSource.DECLARED_WITH_MARGIN


@pytest.mark.parametrize("q", [0.9, 0.5, 0.1, 1.0, 1 / 3, 2 / 3])
def test_empirical_quantile_matches_scan(q):
    hist = [90, 100, 110]
    est = estimate_demand(app(hist), q)
    assert est.booked_marks == empirical_quantile(hist, q)
    assert est.source is EstimateSource.EMPIRICAL_QUANTILE


def test_spec_quantile_examples():
    assert estimate_demand(app([90, 100, 110]), 0.9).booked_marks == 110
    assert estimate_demand(app([90, 100, 110]), 0.5).booked_marks == 100


@pytest.mark.parametrize("q", [0.0, -0.1, 1.5])
def test_invalid_quantile(q):
    with pytest.raises(InvalidQuantile):
        estimate_demand(app([1]), q)


def test_confidence_examples():
    p = app([90, 100, 110])
    assert on_time_confidence(p, 100) == pytest.approx(2 / 3, abs=0)
    assert on_time_confidence(p, 110) == 1.0
    assert on_time_confidence(app(), 12345.0) == 0.5


histories = st.lists(st.integers(1, 1000), min_size=1, max_size=40)


@given(histories, st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_estimate_monotone_in_q(hist, q1, q2):
    q1, q2 = sorted((q1, q2))
    p = app(hist)
    assert estimate_demand(p, q1).booked_marks <= estimate_demand(p, q2).booked_marks


@given(histories, st.floats(0.01, 1.0))
def test_estimate_agrees_with_scan(hist, q):
    assert estimate_demand(app(hist), q).booked_marks == empirical_quantile(hist, q)


@given(histories, st.integers(1, 1100), st.integers(1, 1100))
def test_confidence_monotone_and_bounded(hist, a, b):
    a, b = sorted((a, b))
    p = app(hist)
    ca, cb = on_time_confidence(p, a), on_time_confidence(p, b)
    assert 0.0 <= ca <= cb <= 1.0
    assert ca == sum(1 for x in hist if x <= a) / len(hist)


@pytest.mark.parametrize("q", [0.5, 0.9])
def test_quantile_converges_on_lognormal(q):
    rng = random.Random(42)
    mu, sigma = math.log(1000.0), 0.4
    xs = [rng.lognormvariate(mu, sigma) for _ in range(1000)]
    true_q = math.exp(mu + sigma * NormalDist().inv_cdf(q))
    est = estimate_demand(app(xs), q).booked_marks
    assert abs(est - true_q) / true_q < 0.05


def test_feedback_shrinks_margin():
    rng = random.Random(5)
    mu, sigma = math.log(500.0), 0.2
    true_q90 = math.exp(mu + sigma * NormalDist().inv_cdf(0.9))
    p = app(declared=true_q90 * 1.5)
    cold = estimate_demand(p).booked_marks
    for i in range(50):
        p = record_run(p, RunRecord(rng.lognormvariate(mu, sigma), 1.0, "n", float(i)))
    assert estimate_demand(p).booked_marks < cold
