"""Schedule plans and the two resource-agnostic baselines (ring, tree)."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Pair = tuple[int, int]  # (sender, receiver)


class PlanError(ValueError):
    pass


@dataclass
class SchedulePlan:
    """Pair aggregations grouped into concurrent rounds plus busy-gated pairs.

    Execution order is ``rounds`` (flattened) followed by ``deferred``; only
    the order of pairs sharing a device matters for the result.
    """

    devices: list[int]
    rounds: list[list[Pair]] = field(default_factory=list)
    deferred: list[Pair] = field(default_factory=list)
    source: str = ""

    def pairs(self) -> list[Pair]:
        return [p for rnd in self.rounds for p in rnd] + list(self.deferred)

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def depth(self) -> int:
        """Rounds needed if every pair (deferred included) ran ASAP."""
        return len(pack_rounds(self.pairs()))

    def receive_counts(self) -> dict[int, int]:
        c = Counter(r for _, r in self.pairs())
        return {d: c.get(d, 0) for d in self.devices}

    def survivor(self) -> int:
        senders = {s for s, _ in self.pairs()}
        rest = [d for d in self.devices if d not in senders]
        if len(rest) != 1:
            raise PlanError(f"plan leaves {len(rest)} survivors")
        return rest[0]

    def validate(self) -> None:
        devices = set(self.devices)
        if len(devices) != len(self.devices):
            raise PlanError("duplicate device ids")
        pairs = self.pairs()
        if len(pairs) != len(devices) - 1:
            raise PlanError(f"{len(pairs)} pairs for {len(devices)} devices")
        for rnd in self.rounds:
            touched = [d for p in rnd for d in p]
            if len(touched) != len(set(touched)):
                raise PlanError(f"round {rnd} is not vertex-disjoint")
        done: set[int] = set()
        for s, r in pairs:
            if s not in devices or r not in devices or s == r:
                raise PlanError(f"bad pair {s}->{r}")
            if s in done or r in done:
                raise PlanError(f"pair {s}->{r} touches a device that already sent")
            done.add(s)
        self.survivor()

    def to_dict(self) -> dict:
        return {"devices": self.devices, "rounds": [[list(p) for p in r] for r in self.rounds],
                "deferred": [list(p) for p in self.deferred], "source": self.source}


def pack_rounds(pairs: Iterable[Pair]) -> list[list[Pair]]:
    """Place each pair in the earliest round after every earlier pair on its devices."""
    last: dict[int, int] = {}
    rounds: list[list[Pair]] = []
    for s, r in pairs:
        k = max(last.get(s, -1), last.get(r, -1)) + 1
        if k == len(rounds):
            rounds.append([])
        rounds[k].append((s, r))
        last[s] = last[r] = k
    return rounds


def ring_plan(devices: Sequence[int]) -> SchedulePlan:
    devices = list(devices)
    if len(devices) < 2:
        raise PlanError("ring_plan needs at least 2 devices")
    rounds = [[(devices[i], devices[i + 1])] for i in range(len(devices) - 1)]
    return SchedulePlan(devices, rounds, [], "ring")


def tree_plan(devices: Sequence[int]) -> SchedulePlan:
    """Reverse binomial reduce: survivors pair up each round, odd one carries over."""
    devices = list(devices)
    if len(devices) < 2:
        raise PlanError("tree_plan needs at least 2 devices")
    alive = devices
    rounds = []
    while len(alive) > 1:
        rnd = [(alive[i + 1], alive[i]) for i in range(0, len(alive) - 1, 2)]
        rounds.append(rnd)
        alive = alive[0::2]
    return SchedulePlan(devices, rounds, [], "tree")


def star_plan(devices: Sequence[int], root: int | None = None) -> SchedulePlan:
    """Parameter-server shape: everyone sends to ``root`` (used for central mode)."""
    devices = list(devices)
    root = devices[0] if root is None else root
    others = [d for d in devices if d != root]
    return SchedulePlan(devices, [[(d, root)] for d in others], [], "central")
