"""Post-hoc comparison of simulator traces: objective, benchmark tables, peak concurrency."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from chainreduce.resources import normalize
from chainreduce.sim.trace import SimTrace


@dataclass(frozen=True)
class Bounds:
    t_min: float
    t_max: float
    e_min: float
    e_max: float


def bounds_from(traces: Sequence[SimTrace]) -> Bounds:
    """Min/max of per-iteration makespan and energy variance over every trace given."""
    t = np.concatenate([tr.makespans() for tr in traces])
    e = np.concatenate([tr.energy_variances() for tr in traces])
    if t.size == 0:
        raise ValueError("no iterations to bound")
    return Bounds(float(t.min()), float(t.max()), float(e.min()), float(e.max()))


def objective(trace: SimTrace, bounds: Bounds) -> float:
    """Sum over iterations of normalized makespan plus normalized energy variance; lower is better."""
    total = 0.0
    for r in trace.records:
        total += normalize(r.makespan, bounds.t_min, bounds.t_max)
        total += normalize(r.energy_variance(), bounds.e_min, bounds.e_max)
    return total


def peak_concurrency(trace: SimTrace) -> dict[int, int]:
    """Per device, the most aggregation tasks it took part in at one instant."""
    n = trace.config["sim"]["num_devices"]
    points = []
    for start, end, s, r in trace.agg_intervals:
        for d in {s, r}:
            points.append((start, 1, d))
            points.append((end, -1, d))
    points.sort(key=lambda p: (p[0], p[1]))  # ends before starts at equal times
    cur = defaultdict(int)
    peak = {d: 0 for d in range(n)}
    for _, delta, d in points:
        cur[d] += delta
        peak[d] = max(peak[d], cur[d])
    return peak


def _std(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


@dataclass
class SchedulerStats:
    runs: int
    makespan_mean: float
    makespan_std: float
    energy_var_mean: float
    energy_var_std: float
    objective: float


@dataclass
class BenchmarkSummary:
    rows: dict[str, SchedulerStats] = field(default_factory=dict)
    deltas: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rows": {k: asdict(v) for k, v in self.rows.items()}, "deltas": self.deltas}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    def write_csv(self, path: str | Path) -> None:
        cols = ["runs", "makespan_mean", "makespan_std", "energy_var_mean", "energy_var_std", "objective"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scheduler"] + cols)
            for name, st in self.rows.items():
                w.writerow([name] + [f"{getattr(st, c):.6f}" if c != "runs" else st.runs for c in cols])

    def write_gnuplot(self, path: str | Path) -> None:
        """Whitespace-separated columns: index name makespan (mean, std) energy variance (mean, std)."""
        with open(path, "w") as fh:
            fh.write("# idx scheduler makespan_mean makespan_std energy_var_mean energy_var_std\n")
            for i, (name, st) in enumerate(self.rows.items()):
                fh.write(f"{i} {name} {st.makespan_mean:.6f} {st.makespan_std:.6f} "
                         f"{st.energy_var_mean:.6f} {st.energy_var_std:.6f}\n")


def _config_key(tr: SimTrace) -> str:
    cfg = json.loads(json.dumps(tr.config, sort_keys=True))
    cfg["sim"].pop("seed", None)
    return json.dumps(cfg, sort_keys=True)


def compare_schedulers(groups: Mapping[str, Sequence[SimTrace]]) -> BenchmarkSummary:
    """Summary rows per scheduler plus chain-vs-baseline relative deltas.

    Normalization bounds for the objective come from the union of all traces.
    """
    if not groups or any(len(v) == 0 for v in groups.values()):
        raise ValueError("every scheduler group needs at least one trace")
    keys = {_config_key(tr) for v in groups.values() for tr in v}
    if len(keys) != 1:
        raise ValueError("traces differ in configuration beyond scheduler and seed")
    everything = [tr for v in groups.values() for tr in v]
    bounds = bounds_from(everything)
    out = BenchmarkSummary()
    for name, traces in groups.items():
        ms = np.array([tr.makespans().mean() for tr in traces])
        ev = np.array([tr.energy_variances().mean() for tr in traces])
        obj = float(np.mean([objective(tr, bounds) for tr in traces]))
        out.rows[name] = SchedulerStats(len(traces), float(ms.mean()), _std(ms), float(ev.mean()), _std(ev), obj)
    for a, b in [("chain", "tree"), ("chain", "ring")]:
        if a in out.rows and b in out.rows:
            ra, rb = out.rows[a], out.rows[b]
            out.deltas[f"{a}_vs_{b}"] = {
                "makespan": _rel(ra.makespan_mean, rb.makespan_mean),
                "energy_variance": _rel(ra.energy_var_mean, rb.energy_var_mean),
            }
    return out


def _rel(a: float, b: float) -> float:
    if b == 0:
        return 0.0 if a == 0 else float("inf")
    return (a - b) / b
