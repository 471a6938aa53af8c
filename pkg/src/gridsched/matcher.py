"""First-stage resource matching on non-volatile requirements only."""

from __future__ import annotations

from .profiles import ComputerProfile, NonVolatileFacts, NonVolatileRequirements

__all__ = ["NonVolatileRequirements", "matches", "prune"]


def _norm(s: str) -> str:
    return s.strip().lower()


def _norm_set(xs) -> set:
    return {_norm(x) for x in xs}


def matches(req: NonVolatileRequirements, facts: NonVolatileFacts) -> bool:
    if req.os is not None and _norm(req.os) != _norm(facts.os):
        return False
    if req.arch is not None and _norm(req.arch) != _norm(facts.arch):
        return False
    if req.min_memory_mb > facts.memory_mb:
        return False
    if not _norm_set(req.required_libraries) <= _norm_set(facts.libraries):
        return False
    return _norm_set(req.required_hardware) <= _norm_set(facts.hardware_features)


def prune(req: NonVolatileRequirements, profiles) -> list[ComputerProfile]:
    """Stable-order subsequence of ``profiles`` whose facts satisfy ``req``."""
    return [p for p in profiles if matches(req, p.nonvolatile)]
