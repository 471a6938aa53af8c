"""Self-organised resource discovery over a small-world overlay.

Every node links to ``k_close`` ring neighbours (half before, half after it in
list order) plus ``k_far`` seeded-random distant nodes.  A query floods along
these out-links with a hop budget; each node evaluates a query id at most once
and answers with a bid when it passes the non-volatile filter and its bid
covers the request.  The requester keeps the replies that arrive within the
collection timeout and picks a winner with a total, permutation-invariant key.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .ledger import Bid, LoadLedger, make_bid
from .matcher import matches
from .profiles import NonVolatileFacts, NonVolatileRequirements

DEFAULT_TTL_MAX = 3
DEFAULT_COLLECT_TIMEOUT_S = 2.0
DEFAULT_LATENCY_S = 0.01
CONFIDENCE_BUCKET = 0.05


class BadDegree(ValueError):
    pass


@dataclass(frozen=True)
class Overlay:
    nodes: tuple
    k_close: int
    k_far: int
    close_links: dict
    far_links: dict

    def neighbors(self, node_id: str) -> tuple:
        """Out-links of a node: ring neighbours first, then far links."""
        return self.close_links[node_id] + self.far_links[node_id]


def build_overlay(node_ids, k_close: int, k_far: int, seed: int) -> Overlay:
    nodes = tuple(node_ids)
    n = len(nodes)
    if len(set(nodes)) != n:
        raise BadDegree("node ids must be unique")
    if k_close < 0 or k_close % 2:
        raise BadDegree(f"k_close must be even and non-negative, got {k_close}")
    if n and k_close >= n:
        raise BadDegree(f"k_close={k_close} needs more than {n} nodes")
    if k_far < 0:
        raise BadDegree("k_far must be non-negative")
    if n and k_far > n - 1 - k_close:
        raise BadDegree(f"k_far={k_far} exceeds the {n - 1 - k_close} non-ring candidates")

    rng = random.Random(seed)
    close, far = {}, {}
    half = k_close // 2
    for i, node in enumerate(nodes):
        ring = []
        for step in range(1, half + 1):
            ring.append(nodes[(i - step) % n])
            ring.append(nodes[(i + step) % n])
        close[node] = tuple(ring)
        banned = set(ring) | {node}
        candidates = [x for x in nodes if x not in banned]
        far[node] = tuple(rng.sample(candidates, k_far))
    return Overlay(nodes, k_close, k_far, close, far)


def diameter(overlay: Overlay) -> int:
    """Largest directed hop distance between any two nodes (inf if disconnected)."""
    worst = 0
    for src in overlay.nodes:
        dist = {src: 0}
        todo = deque([src])
        while todo:
            u = todo.popleft()
            for v in overlay.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    todo.append(v)
        if len(dist) < len(overlay.nodes):
            return math.inf
        worst = max(worst, max(dist.values()))
    return worst


@dataclass(frozen=True)
class Query:
    query_id: str
    origin: str
    requirements: NonVolatileRequirements
    demand_marks: float
    window_s: float
    ttl: int = DEFAULT_TTL_MAX
    min_confidence: float = 0.0

    def __post_init__(self):
        if not self.demand_marks > 0:
            raise ValueError("demand_marks must be positive")
        if not self.window_s > 0:
            raise ValueError("window_s must be positive")
        if self.ttl < 0:
            raise ValueError("ttl must be non-negative")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in [0, 1]")

    def forwarded(self) -> "Query":
        return Query(
            self.query_id, self.origin, self.requirements,
            self.demand_marks, self.window_s, self.ttl - 1, self.min_confidence,
        )


@dataclass(frozen=True)
class BidReply:
    query_id: str
    bid: Bid
    hop_count: int


@dataclass
class Forward:
    """A query copy on its way from ``sender`` to ``target``."""

    sender: str
    target: str
    query: Query
    hop_count: int


@dataclass
class SordNode:
    """Protocol state of one node: static facts, current ledger, seen query ids."""

    node_id: str
    facts: NonVolatileFacts
    ledger: LoadLedger
    seen: set = field(default_factory=set)
    bid_fn: Optional[Callable[["SordNode", Query], Bid]] = None
    # spot-load style bidding answers on the filter alone
    gate_on_capacity: bool = True

    def bid_for(self, q: Query) -> Bid:
        if self.bid_fn is not None:
            return self.bid_fn(self, q)
        return make_bid(self.ledger, q.window_s)


def handle_query(node: SordNode, q: Query, hop_count: int = 0, sender: Optional[str] = None,
                 neighbors=()):
    """Evaluate a query at ``node``; returns ``(reply or None, [Forward, ...])``.

    ``neighbors`` are the node's overlay out-links; copies go to all of them
    except ``sender`` while the query still has hops left.
    """
    if q.query_id in node.seen:
        return None, []
    node.seen.add(q.query_id)

    reply = None
    if matches(q.requirements, node.facts):
        bid = node.bid_for(q)
        if not node.gate_on_capacity or (
            bid.confidence >= q.min_confidence and bid.unsubscribed_marks >= q.demand_marks
        ):
            reply = BidReply(q.query_id, bid, hop_count)

    forwards = []
    # the origin always fans out; relays only while hops remain
    if hop_count == 0 or q.ttl > 0:
        nxt = q if hop_count == 0 else q.forwarded()
        forwards = [Forward(node.node_id, t, nxt, hop_count + 1) for t in neighbors if t != sender]
    return reply, forwards


def confidence_bucket(confidence: float) -> int:
    # rounding guard keeps e.g. 0.15 / 0.05 from landing in bucket 2
    return math.floor(round(confidence / CONFIDENCE_BUCKET, 9))


def selection_key(reply: BidReply):
    """Sort key; the smallest key wins."""
    b = reply.bid
    return (-confidence_bucket(b.confidence), -b.unsubscribed_marks, b.node_id)


def select_winner(replies) -> Optional[str]:
    ranked = rank_replies(replies)
    return ranked[0].bid.node_id if ranked else None


def rank_replies(replies) -> list:
    """Replies best-first under the selection key."""
    return sorted(replies, key=selection_key)


@dataclass
class DiscoveryTrace:
    """What one discovery round did on the wire."""

    query_messages: int = 0
    reply_messages: int = 0
    evaluations: dict = field(default_factory=dict)
    replies: list = field(default_factory=list)
    late_replies: list = field(default_factory=list)
    messages: list = field(default_factory=list)


def discover(
    origin: str,
    q: Query,
    overlay: Overlay,
    network: dict,
    latency_s: float = DEFAULT_LATENCY_S,
    collect_timeout_s: float = DEFAULT_COLLECT_TIMEOUT_S,
    trace: Optional[DiscoveryTrace] = None,
) -> Optional[str]:
    """Run one query to completion over ``network`` (node id -> SordNode).

    Time starts at 0 at the origin.  Each hop costs ``latency_s``; a reply
    retraces its path, so it lands ``2 * hop_count * latency_s`` after the
    query left.  Replies later than ``collect_timeout_s`` are discarded.
    """
    trace = trace if trace is not None else DiscoveryTrace()
    counter = itertools.count()
    pending = [(0.0, next(counter), Forward("", origin, q, 0))]
    while pending:
        t, _, msg = heapq.heappop(pending)
        node = network[msg.target]
        if msg.hop_count > 0:
            trace.query_messages += 1
            trace.messages.append(
                {"t": t, "kind": "query", "from": msg.sender, "to": msg.target,
                 "query_id": q.query_id, "ttl": msg.query.ttl, "hops": msg.hop_count}
            )
        if q.query_id not in node.seen:
            trace.evaluations[msg.target] = trace.evaluations.get(msg.target, 0) + 1
        reply, forwards = handle_query(
            node, msg.query, msg.hop_count, msg.sender or None, overlay.neighbors(msg.target)
        )
        if reply is not None:
            arrives = t + msg.hop_count * latency_s
            if msg.hop_count > 0:
                trace.reply_messages += 1
                trace.messages.append(
                    {"t": arrives, "kind": "reply", "from": msg.target, "to": origin,
                     "query_id": q.query_id, "hops": msg.hop_count}
                )
            if arrives <= collect_timeout_s:
                trace.replies.append(reply)
            else:
                trace.late_replies.append(reply)
        for f in forwards:
            heapq.heappush(pending, (t + latency_s, next(counter), f))
    return select_winner(trace.replies)


def query_to_dict(q: Query) -> dict:
    r = q.requirements
    return {
        "query_id": q.query_id,
        "origin": q.origin,
        "requirements": {
            "os": r.os,
            "arch": r.arch,
            "min_memory_mb": r.min_memory_mb,
            "required_libraries": sorted(r.required_libraries),
            "required_hardware": sorted(r.required_hardware),
        },
        "demand_marks": q.demand_marks,
        "window_s": q.window_s,
        "ttl": q.ttl,
        "min_confidence": q.min_confidence,
    }


def reply_to_dict(r: BidReply) -> dict:
    return {
        "query_id": r.query_id,
        "hop_count": r.hop_count,
        "bid": {
            "node_id": r.bid.node_id,
            "window_s": r.bid.window_s,
            "unsubscribed_marks": r.bid.unsubscribed_marks,
            "confidence": r.bid.confidence,
        },
    }
