"""Per-iteration records, checkpoints and the exported run trace."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from chainreduce.params import ParamVector
from chainreduce.resources import EnergyMeter
from chainreduce.sim.events import SimEvent

CHECKPOINT_VERSION = 1


@dataclass
class IterationRecord:
    iteration: int
    epoch: int
    start: float
    participants: list[int]
    contributors: list[int] = field(default_factory=list)
    survivor: int = -1
    theta: float = 0.0
    T_tr: float = 0.0
    T_a: float = 0.0
    T_b: float = 0.0
    agg_span: float = 0.0
    broadcast: float = 0.0
    plan: dict = field(default_factory=dict)
    replans: int = 0
    energy: dict[int, float] = field(default_factory=dict)  # consumption during this iteration
    checkpoints: dict[int, str] = field(default_factory=dict)

    @property
    def makespan(self) -> float:
        """Local training plus the aggregation span (broadcast reported separately)."""
        return self.T_tr + self.agg_span

    def energy_variance(self) -> float:
        vals = np.array([self.energy[d] for d in self.participants if d in self.energy])
        if len(vals) == 0:
            return 0.0
        return float(np.mean((vals - vals.mean()) ** 2))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["makespan"] = self.makespan
        d["energy_variance"] = self.energy_variance()
        d["energy"] = {str(k): v for k, v in self.energy.items()}
        d["checkpoints"] = {str(k): v for k, v in self.checkpoints.items()}
        return d


@dataclass
class Checkpoint:
    device: int
    iteration: int
    weights: ParamVector
    theta: float
    rng_state: dict

    def to_dict(self) -> dict:
        return {"version": CHECKPOINT_VERSION, "device": self.device, "iteration": self.iteration,
                "weights": self.weights.to_dict(), "theta": self.theta, "rng_state": self.rng_state}

    @classmethod
    def from_dict(cls, d: dict) -> "Checkpoint":
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')}")
        return cls(d["device"], d["iteration"], ParamVector.from_dict(d["weights"]), d["theta"], d["rng_state"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class SimTrace:
    scheduler: str
    seed: int
    config: dict
    events: list[SimEvent] = field(default_factory=list)
    records: list[IterationRecord] = field(default_factory=list)
    meters: list[EnergyMeter] = field(default_factory=list)
    energy_log: list[tuple] = field(default_factory=list)  # (time, device, kind, amount, component, cost)
    agg_intervals: list[tuple[float, float, int, int]] = field(default_factory=list)
    epoch_weights: list[np.ndarray] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)
    final_accuracy: float = float("nan")
    final_weights: np.ndarray | None = None
    device_weights: dict[int, np.ndarray] = field(default_factory=dict)
    broadcasts: list = field(default_factory=list)
    gradients: list[dict[int, np.ndarray]] = field(default_factory=list)  # only when requested
    aborted: bool = False
    end_time: float = 0.0

    def makespans(self) -> np.ndarray:
        return np.array([r.makespan for r in self.records])

    def energy_variances(self) -> np.ndarray:
        return np.array([r.energy_variance() for r in self.records])

    def write_events_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "kind", "device", "detail"])
            for ev in self.events:
                w.writerow([f"{ev.time:.6f}", ev.kind, ev.device, ev.detail()])

    def metrics_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "seed": self.seed,
            "aborted": self.aborted,
            "final_accuracy": self.final_accuracy,
            "epoch_accuracy": self.epoch_accuracy,
            "end_time": self.end_time,
            "iterations": [r.to_dict() for r in self.records],
            "energy": [m.to_dict() for m in self.meters],
            "config": self.config,
        }

    def write_metrics_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.metrics_dict(), indent=1, sort_keys=True, default=_jsonable))

    def save(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.write_events_csv(out / "events.csv")
        self.write_metrics_json(out / "metrics.json")
        return out


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")
