"""Empirical demand model fed by completed runs.

A cold profile books its declared demand inflated by a safety factor.  Once a
single run has been recorded the booking switches to the lower empirical
quantile of observed demand, so the margin shrinks as history accumulates.
Confidence that a booking suffices is the empirical CDF at the booked value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .profiles import ApplicationProfile, RunRecord

DEFAULT_QUANTILE = 0.9
DEFAULT_SAFETY_FACTOR = 1.5
DEFAULT_COLD_START_CONFIDENCE = 0.5


class InvalidQuantile(ValueError):
    pass


class EstimateSource(str, Enum):
    DECLARED_WITH_MARGIN = "declared_with_margin"
    EMPIRICAL_QUANTILE = "empirical_quantile"


@dataclass(frozen=True)
class DemandConfig:
    quantile: float = DEFAULT_QUANTILE
    safety_factor: float = DEFAULT_SAFETY_FACTOR
    cold_start_confidence: float = DEFAULT_COLD_START_CONFIDENCE

    def __post_init__(self):
        _check_quantile(self.quantile)
        if not self.safety_factor > 0:
            raise ValueError("safety_factor must be positive")
        if not 0.0 <= self.cold_start_confidence <= 1.0:
            raise ValueError("cold_start_confidence must lie in [0, 1]")


@dataclass(frozen=True)
class DemandEstimate:
    booked_marks: float
    quantile_q: float
    source: EstimateSource


def _check_quantile(q):
    if not (0.0 < q <= 1.0):
        raise InvalidQuantile(f"quantile must lie in (0, 1], got {q!r}")


def record_run(profile: ApplicationProfile, rec: RunRecord) -> ApplicationProfile:
    return replace(profile, history=profile.history + (rec,))


def lower_quantile(values, q: float) -> float:
    """Smallest sample whose empirical CDF is at least ``q``."""
    _check_quantile(q)
    xs = sorted(values)
    n = len(xs)
    # k/n >= q, guarding against q*n landing a hair above an integer
    k = max(1, math.ceil(q * n - 1e-9))
    return xs[k - 1]


def estimate_demand(
    profile: ApplicationProfile,
    q: float = DEFAULT_QUANTILE,
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
) -> DemandEstimate:
    _check_quantile(q)
    if not profile.history:
        return DemandEstimate(
            profile.declared_demand_marks * safety_factor,
            q,
            EstimateSource.DECLARED_WITH_MARGIN,
        )
    booked = lower_quantile([r.demand_marks for r in profile.history], q)
    return DemandEstimate(booked, q, EstimateSource.EMPIRICAL_QUANTILE)


def on_time_confidence(
    profile: ApplicationProfile,
    booked_marks: float,
    prior: float = DEFAULT_COLD_START_CONFIDENCE,
) -> float:
    if not profile.history:
        return prior
    hits = sum(1 for r in profile.history if r.demand_marks <= booked_marks)
    return hits / len(profile.history)
