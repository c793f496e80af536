"""Simulator configuration and TOML/JSON loading."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib as tomli
except ImportError:  # Python < 3.11
    import tomli

from chainreduce.params import TrainHyper
from chainreduce.resources import BusyPolicy, EnergyCosts
from chainreduce.scheduler.env import RLConfig


@dataclass(frozen=True)
class FaultSpec:
    time: float
    device: int
    kind: str  # drop | reconnect

    def __post_init__(self):
        if self.kind not in ("drop", "reconnect"):
            raise ValueError(f"unknown fault kind {self.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    num_devices: int = 8
    seed: int = 0
    # channels (ms, bytes/ms)
    control_latency: float = 20.0
    data_base_latency: float = 50.0
    data_bandwidth: float = 250.0
    agg_compute: float = 20.0
    header_bytes: int = 64
    report_period: float = 500.0
    # local training time per batch: mean * (1 + jitter * U(-1, 1)), per-device scale optional
    train_time_mean: float = 1000.0
    train_time_jitter: float = 0.1
    train_time_scale: tuple[float, ...] = ()
    # busy process
    busy_enabled: bool = True
    busy_mean: float = 1500.0
    free_mean: float = 3000.0
    busy_cap: float = 0.5
    # faults
    fault_script: tuple[FaultSpec, ...] = ()
    reconnect_attempts: int = 3
    reconnect_backoff: float = 500.0
    ma_device: int = 0
    # toy task
    num_classes: int = 3
    per_class: int = 100
    dim: int = 4
    spread: float = 0.6
    data_seed: int = 7
    hidden: int = 16
    max_iterations: int | None = None
    battery_capacity: float = 5000.0  # energy units behind the reported battery percentage
    energy: EnergyCosts = field(default_factory=EnergyCosts)
    busy_policy: BusyPolicy = field(default_factory=BusyPolicy)

    def __post_init__(self):
        if self.num_devices < 2:
            raise ValueError("num_devices must be >= 2")
        for name in ("control_latency", "data_base_latency", "data_bandwidth", "report_period",
                     "train_time_mean", "busy_mean", "free_mean"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.agg_compute < 0:
            raise ValueError("agg_compute must be non-negative")
        if not 0 <= self.busy_cap <= 1:
            raise ValueError("busy_cap must be in [0, 1]")
        if self.train_time_scale and len(self.train_time_scale) != self.num_devices:
            raise ValueError("train_time_scale needs one entry per device")
        for f in self.fault_script:
            if not 0 <= f.device < self.num_devices:
                raise ValueError(f"fault for unknown device {f.device}")

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fault_script"] = [asdict(f) for f in self.fault_script]
        d["train_time_scale"] = list(self.train_time_scale)
        return d


def _build(cls, raw: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return raw


def sim_config_from_dict(raw: dict) -> SimConfig:
    raw = dict(_build(SimConfig, raw))
    if "fault_script" in raw:
        raw["fault_script"] = tuple(FaultSpec(float(f["time"]), int(f["device"]), f["kind"])
                                    for f in raw["fault_script"])
    if "train_time_scale" in raw:
        raw["train_time_scale"] = tuple(raw["train_time_scale"])
    if "energy" in raw:
        raw["energy"] = EnergyCosts(**raw["energy"])
    if "busy_policy" in raw:
        raw["busy_policy"] = BusyPolicy(**raw["busy_policy"])
    return SimConfig(**raw)


def load_fault_script(path: str | Path) -> tuple[FaultSpec, ...]:
    """JSON list or TOML ``[[fault]]`` tables of {time, device, kind}."""
    text = Path(path).read_text()
    if str(path).endswith(".toml"):
        items = tomli.loads(text).get("fault", [])
    else:
        items = json.loads(text)
    return tuple(FaultSpec(float(f["time"]), int(f["device"]), f["kind"]) for f in items)


@dataclass
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    train: TrainHyper = field(default_factory=TrainHyper)
    rl: RLConfig = field(default_factory=RLConfig)

    def to_dict(self) -> dict:
        return {"sim": self.sim.to_dict(), "train": asdict(self.train), "rl": asdict(self.rl)}


def load_config(path: str | Path) -> RunConfig:
    """Read ``[sim]``, ``[train]`` and ``[rl]`` tables from TOML or JSON."""
    path = Path(path)
    text = path.read_text()
    raw = json.loads(text) if path.suffix == ".json" else tomli.loads(text)
    unknown = set(raw) - {"sim", "train", "rl"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    sim = sim_config_from_dict(raw.get("sim", {}))
    train = TrainHyper(**_build(TrainHyper, raw.get("train", {})))
    rl = RLConfig(**_build(RLConfig, raw.get("rl", {})))
    return RunConfig(sim, train, rl)
