"""Device lifecycle, resource reports, and energy accounting."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


class DeviceState(enum.Enum):
    FREE = "free"
    BUSY = "busy"
    SEND = "send"
    GET = "get"
    DONE = "done"


LEGAL_TRANSITIONS: dict[DeviceState, frozenset[DeviceState]] = {
    DeviceState.FREE: frozenset({DeviceState.BUSY, DeviceState.SEND, DeviceState.GET}),
    DeviceState.BUSY: frozenset({DeviceState.FREE}),
    DeviceState.SEND: frozenset({DeviceState.DONE}),
    DeviceState.GET: frozenset({DeviceState.FREE}),
    DeviceState.DONE: frozenset(),
}


class IllegalTransition(RuntimeError):
    pass


def transition(current: DeviceState, new: DeviceState) -> DeviceState:
    if new not in LEGAL_TRANSITIONS[current]:
        raise IllegalTransition(f"{current.name} -> {new.name}")
    return new


@dataclass(frozen=True)
class ResourceReport:
    free_memory: float  # MB
    battery: float  # percent
    in_use: bool
    charging: bool
    cpu: float  # percent
    timestamp: float = 0.0

    def __post_init__(self):
        if not 0 <= self.battery <= 100:
            raise ValueError(f"battery out of range: {self.battery}")
        if not 0 <= self.cpu <= 100:
            raise ValueError(f"cpu out of range: {self.cpu}")
        if self.free_memory < 0:
            raise ValueError("free_memory must be non-negative")

    def resource_key(self) -> tuple[float, float, float]:
        """Sort key, larger is better-resourced: (battery, free_memory, -cpu)."""
        return (self.battery, self.free_memory, -self.cpu)


@dataclass(frozen=True)
class BusyPolicy:
    cpu_threshold: float = 80.0
    battery_floor: float = 15.0
    memory_floor: float = 64.0


def classify(report: ResourceReport, policy: BusyPolicy = BusyPolicy()) -> DeviceState:
    """Busy when in use, CPU-loaded, low on battery (unplugged) or memory."""
    if (report.in_use
            or report.cpu > policy.cpu_threshold
            or (report.battery < policy.battery_floor and not report.charging)
            or report.free_memory < policy.memory_floor):
        return DeviceState.BUSY
    return DeviceState.FREE


@dataclass(frozen=True)
class ResourceLimits:
    max_memory: float
    max_battery: float

    def __post_init__(self):
        if self.max_memory <= 0 or self.max_battery <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class EnergyCosts:
    train: float = 0.05  # per ms of local training
    aggregate: float = 0.8  # per pair aggregation
    byte: float = 1e-4
    report: float = 1e-3


ENERGY_COMPONENTS = ("train", "aggregate_compute", "send", "receive", "report")


@dataclass(frozen=True)
class EnergyEvent:
    kind: str  # train | aggregate | send | receive | report
    amount: float = 0.0  # dt for train, bytes for send/receive

    def __post_init__(self):
        if self.kind not in ("train", "aggregate", "send", "receive", "report"):
            raise ValueError(f"unknown energy event {self.kind!r}")
        if self.amount < 0:
            raise ValueError("energy event amount must be non-negative")


@dataclass(frozen=True)
class EnergyMeter:
    components: dict = field(default_factory=lambda: {k: 0.0 for k in ENERGY_COMPONENTS})

    @property
    def consumed(self) -> float:
        return float(sum(self.components.values()))

    def to_dict(self) -> dict:
        return {"consumed": self.consumed, **self.components}


def event_cost(event: EnergyEvent, costs: EnergyCosts) -> tuple[str, float]:
    if event.kind == "train":
        return "train", costs.train * event.amount
    if event.kind == "aggregate":
        return "aggregate_compute", costs.aggregate
    if event.kind == "send":
        return "send", costs.byte * event.amount
    if event.kind == "receive":
        return "receive", costs.byte * event.amount
    return "report", costs.report


def charge_energy(meter: EnergyMeter, event: EnergyEvent, costs: EnergyCosts = EnergyCosts()) -> EnergyMeter:
    component, cost = event_cost(event, costs)
    comps = dict(meter.components)
    comps[component] += cost
    return replace(meter, components=comps)


def energy_variance(consumed: Sequence[float] | Sequence[EnergyMeter]) -> float:
    """Population variance of per-device consumption."""
    if len(consumed) == 0:
        raise ValueError("energy_variance needs at least one meter")
    vals = np.array([m.consumed if isinstance(m, EnergyMeter) else m for m in consumed], dtype=np.float64)
    return float(np.mean((vals - vals.mean()) ** 2))


def normalize(x: float, xmin: float, xmax: float) -> float:
    if not xmax > xmin:
        raise ValueError(f"degenerate bounds [{xmin}, {xmax}]")
    return min(1.0, max(0.0, (x - xmin) / (xmax - xmin)))
