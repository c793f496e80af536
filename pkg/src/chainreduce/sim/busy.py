"""Seeded two-state busy/free process with a cap on concurrently busy devices.

Timelines depend only on the seed and the clock, never on what the simulator
does, so different schedulers see identical busy patterns for one seed.
"""
from __future__ import annotations

import bisect
import heapq

import numpy as np


class BusyProcess:
    def __init__(self, n: int, busy_mean: float, free_mean: float, cap: float, seed: int, enabled: bool = True):
        self.n = n
        self.busy_mean = busy_mean
        self.free_mean = free_mean
        self.max_busy = int(np.floor(cap * n))
        self.enabled = enabled and self.max_busy > 0
        self._rngs = [np.random.default_rng([seed, 0xB05, d]) for d in range(n)]
        self.times: list[list[float]] = [[0.0] for _ in range(n)]
        self.states: list[list[bool]] = [[False] for _ in range(n)]
        self._horizon = 0.0
        self._heap: list = []
        self._busy_now = 0
        if not self.enabled:
            return
        p_busy = busy_mean / (busy_mean + free_mean)
        for d in range(n):
            start_busy = self._rngs[d].random() < p_busy and self._busy_now < self.max_busy
            if start_busy:
                self.states[d][0] = True
                self._busy_now += 1
            self._schedule(d, 0.0, start_busy)

    def _schedule(self, d: int, now: float, busy: bool) -> None:
        mean = self.busy_mean if busy else self.free_mean
        heapq.heappush(self._heap, (now + float(self._rngs[d].exponential(mean)), d))

    def extend(self, until: float) -> None:
        while self.enabled and self._heap and self._heap[0][0] <= until:
            t, d = heapq.heappop(self._heap)
            busy = self.states[d][-1]
            if busy:
                self._append(d, t, False)
                self._busy_now -= 1
                self._schedule(d, t, False)
            elif self._busy_now < self.max_busy:
                self._append(d, t, True)
                self._busy_now += 1
                self._schedule(d, t, True)
            else:
                self._schedule(d, t, False)  # cap reached: stay free for another period
        self._horizon = max(self._horizon, until)

    def _append(self, d: int, t: float, busy: bool) -> None:
        self.times[d].append(t)
        self.states[d].append(busy)

    def is_busy(self, d: int, t: float) -> bool:
        self.extend(t)
        i = bisect.bisect_right(self.times[d], t) - 1
        return self.states[d][i]

    def next_change(self, d: int, t: float) -> float | None:
        """First toggle time strictly after ``t`` for device ``d``."""
        if not self.enabled:
            return None
        horizon = max(t, self._horizon)
        while True:
            self.extend(horizon)
            i = bisect.bisect_right(self.times[d], t)
            if i < len(self.times[d]):
                return self.times[d][i]
            horizon += self.busy_mean + self.free_mean

    def busy_count(self, t: float) -> int:
        return sum(self.is_busy(d, t) for d in range(self.n))
