"""Resource-aware binomial broadcast of the global weights."""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from chainreduce.resources import ResourceReport

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hop:
    sent: float
    arrived: float
    src: int
    dst: int
    ok: bool = True
    retry: bool = False  # re-parented to the MA after a failure upstream


@dataclass
class BroadcastLog:
    ma: int
    order: list[int]
    hops: list[Hop] = field(default_factory=list)
    received: dict[int, float] = field(default_factory=dict)
    end: float = 0.0

    @property
    def direct_sends(self) -> int:
        """First-attempt sends made by the MA (retries excluded)."""
        return sum(1 for h in self.hops if h.src == self.ma and not h.retry)

    def delivered(self) -> list[int]:
        return sorted(h.dst for h in self.hops if h.ok)


def forwarding_order(ma: int, recipients: Sequence[int],
                     reports: Mapping[int, ResourceReport] | None = None) -> list[int]:
    """MA first, then recipients by descending resource key (battery, memory, -cpu), ids break ties."""
    reports = reports or {}
    rest = [d for d in recipients if d != ma]

    def key(d):
        r = reports.get(d)
        rk = r.resource_key() if r is not None else (0.0, 0.0, 0.0)
        return tuple(-x for x in rk) + (d,)

    return [ma] + sorted(rest, key=key)


def binomial_children(size: int) -> dict[int, list[int]]:
    """Rank r forwards to r + 2^k for every 2^k > r (in increasing k)."""
    children = {r: [] for r in range(size)}
    for r in range(size):
        k = r.bit_length()
        while r + (1 << k) < size:
            children[r].append(r + (1 << k))
            k += 1
    return children


def broadcast_global(ma: int, recipients: Sequence[int], reports: Mapping[int, ResourceReport] | None = None,
                     hop_time: float = 1.0, start: float = 0.0,
                     drop_times: Mapping[int, float] | None = None) -> BroadcastLog:
    """Simulate the forwarding tree; sends from one device are sequential.

    A receiver that has dropped by the arrival time loses the hop, and its
    subtree is re-parented to the MA.  A forwarder that drops before it has
    finished its sends hands its remaining children back to the MA as well.
    """
    drop_times = drop_times or {}
    order = forwarding_order(ma, recipients, reports)
    kids = binomial_children(len(order))
    children = {order[r]: [order[c] for c in cs] for r, cs in kids.items()}
    out = BroadcastLog(ma, order)
    queues = {d: deque(children[d]) for d in order}
    retry_of: set[int] = set()
    scheduled: set[int] = set()
    ready_at = {d: start for d in order}
    heap: list = []
    seq = itertools.count()

    def wake(d: int, t: float) -> None:
        if d not in scheduled and queues[d]:
            scheduled.add(d)
            heapq.heappush(heap, (max(t, ready_at[d]), next(seq), d))

    def dropped(d: int, t: float) -> bool:
        return d in drop_times and drop_times[d] <= t

    def reparent(ds, t: float) -> None:
        for d in ds:
            retry_of.add(d)
            queues[ma].append(d)
        wake(ma, t)

    wake(ma, start)
    while heap:
        t, _, d = heapq.heappop(heap)
        scheduled.discard(d)
        if d != ma and dropped(d, t):
            log.info("forwarder %d dropped; %d children back to MA", d, len(queues[d]))
            rest = list(queues[d])
            queues[d].clear()
            reparent(rest, t)
            continue
        child = queues[d].popleft()
        arrive = t + hop_time
        retry = child in retry_of and d == ma
        if dropped(child, arrive):
            out.hops.append(Hop(t, arrive, d, child, ok=False, retry=retry))
            log.info("broadcast hop %d->%d failed; re-parenting its subtree", d, child)
            lost = list(queues[child])
            queues[child].clear()
            reparent(lost, arrive)
        else:
            out.hops.append(Hop(t, arrive, d, child, ok=True, retry=retry))
            out.received[child] = arrive
            ready_at[child] = arrive
            wake(child, arrive)
        ready_at[d] = arrive
        wake(d, arrive)
    out.end = max([start] + [h.arrived for h in out.hops])
    return out


def direct_send_bound(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0
