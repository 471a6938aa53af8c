"""Independent reference checks used by the tests.

None of these reuse the library's own algorithms: feasibility is decided by
max-flow over unit time slots or by trying every job order, quantiles by
scanning sorted samples, winners by pairwise comparison.
"""

import itertools
import math

import networkx as nx


def flow_feasible(rate: int, jobs, now: int = 0) -> bool:
    """Does a preemptive single-machine schedule meet every deadline?

    ``jobs`` is a list of (marks, due) with integer values.  Time is cut into
    unit slots [t, t+1); each slot offers ``rate`` marks, shared freely among
    jobs due at or after its end.  A schedule exists iff max flow saturates
    every job.
    """
    g = nx.DiGraph()
    need = 0
    for i, (marks, due) in enumerate(jobs):
        need += marks
        g.add_edge("src", ("job", i), capacity=marks)
        for t in range(now, due):
            g.add_edge(("job", i), ("slot", t), capacity=rate)
            g.add_edge(("slot", t), "sink", capacity=rate)
    if need == 0:
        return True
    if "sink" not in g:
        return False
    return nx.maximum_flow_value(g, "src", "sink") >= need


def order_feasible(rate: float, jobs, now: float = 0.0) -> bool:
    """Try every non-preemptive job order (enough when all jobs are released at ``now``)."""
    if not jobs:
        return True
    for order in itertools.permutations(jobs):
        t = now
        ok = True
        for marks, due in order:
            t += marks / rate
            if t > due + 1e-9:
                ok = False
                break
        if ok:
            return True
    return False


def empirical_quantile(values, q):
    xs = sorted(values)
    for i, x in enumerate(xs, start=1):
        if i / len(xs) >= q - 1e-12:
            return x
    return xs[-1]


def beats(a, b) -> bool:
    """Pairwise preference between two bids, written out longhand."""
    ba = math.floor(round(a.confidence / 0.05, 9))
    bb = math.floor(round(b.confidence / 0.05, 9))
    if ba != bb:
        return ba > bb
    if a.unsubscribed_marks != b.unsubscribed_marks:
        return a.unsubscribed_marks > b.unsubscribed_marks
    return a.node_id < b.node_id


def exhaustive_winner(bids):
    for cand in bids:
        if all(cand is other or beats(cand, other) for other in bids):
            return cand.node_id
    return None
