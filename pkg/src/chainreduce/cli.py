"""Command-line entry point: ``chainreduce {train,sched-bench,rl}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from chainreduce.metrics import compare_schedulers, peak_concurrency
from chainreduce.scheduler.agent import train_agent
from chainreduce.scheduler.env import SchedEnv
from chainreduce.sim.config import RunConfig, load_config, load_fault_script
from chainreduce.sim.engine import SCHEDULERS, run_experiment

log = logging.getLogger("chainreduce.cli")


@dataclass
class RunManifest:
    subcommand: str
    config: str | None
    seeds: list[int]
    out: str
    scheduler: str | None = None
    rl_overrides: dict = field(default_factory=dict)
    status: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")

    def write(self) -> None:
        Path(self.out, "manifest.json").write_text(json.dumps(asdict(self), indent=1, sort_keys=True))


def parse_seeds(text: str) -> list[int]:
    """``1..5`` (inclusive), ``1,4,9`` or a single integer."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out or len(set(out)) != len(out):
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    return out


def parse_sweep(text: str) -> list[float]:
    """``start:step:stop`` inclusive of stop."""
    try:
        lo, step, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:step:stop, got {text!r}")
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}")
    k = int(np.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 10) for i in range(k + 1)]


def parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chainreduce", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML or JSON file with [sim], [train], [rl] tables")
        sp.add_argument("--seeds", type=parse_seeds, default=[0], help="e.g. 1..5 or 1,2,7")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--epochs", type=int, help="training epochs (rl: max episodes)")

    t = sub.add_parser("train", help="run training jobs and compare final accuracy")
    common(t)
    t.add_argument("--scheduler", choices=SCHEDULERS, help="default: central, chain and neighbor")
    t.add_argument("--agg-rounds", type=int, help="aggregations per epoch (default: every batch)")
    t.add_argument("--fault-script", help="JSON or TOML list of {time, device, kind}")

    b = sub.add_parser("sched-bench", help="ring / tree / chain makespan and energy benchmark")
    common(b)
    b.add_argument("--scheduler", choices=SCHEDULERS, action="append",
                   help="repeatable; default ring, tree, chain")
    b.add_argument("--devices", type=parse_int_list, help="device counts, e.g. 4,6,8")
    b.add_argument("--iterations", type=int, default=4, help="iterations per run")
    b.add_argument("--agg-rounds", type=int)
    b.add_argument("--fault-script")

    r = sub.add_parser("rl", help="train scheduler agents under dge / tge / tdge")
    common(r)
    r.add_argument("--strategy", choices=("dge", "tge", "tdge"), action="append",
                   help="repeatable; default all three")
    r.add_argument("--devices", type=int, help="number of devices in the environment")
    r.add_argument("--calibrate-phi", type=parse_sweep, help="sweep phi, e.g. 0:0.1:0.5")
    return p


def _load(args) -> RunConfig:
    rc = load_config(args.config) if args.config else RunConfig()
    sim, train, rl = rc.sim, rc.train, rc.rl
    if args.epochs is not None:
        if args.command == "rl":
            rl = rl.with_(max_epoch=args.epochs)
        else:
            train = type(train)(**{**asdict(train), "epochs": args.epochs})
    if getattr(args, "agg_rounds", None) is not None:
        train = type(train)(**{**asdict(train), "agg_rounds_per_epoch": args.agg_rounds})
    if getattr(args, "fault_script", None):
        sim = sim.with_(fault_script=load_fault_script(args.fault_script))
    return RunConfig(sim, train, rl)


def cmd_train(args) -> int:
    rc = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kinds = [args.scheduler] if args.scheduler else ["central", "chain", "neighbor"]
    man = RunManifest("train", args.config, args.seeds, str(out), args.scheduler)
    rows, ok = [], True
    for kind in kinds:
        for seed in args.seeds:
            key = f"{kind}/seed{seed}"
            try:
                tr = run_experiment(rc.sim.with_(seed=seed), rc.train, kind, rc.rl,
                                    checkpoint_dir=out / kind / f"seed{seed}" / "checkpoints")
            except Exception as exc:  # per-seed status; keep going
                log.error("%s failed: %s", key, exc)
                man.status[key] = f"error: {exc}"
                ok = False
                continue
            tr.save(out / kind / f"seed{seed}")
            man.status[key] = "aborted" if tr.aborted else "ok"
            ok &= not tr.aborted
            rows.append((kind, seed, tr.final_accuracy, len(tr.records), man.status[key]))
    with open(out / "accuracy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheduler", "seed", "final_accuracy", "iterations", "status"])
        for kind, seed, acc, it, st in rows:
            w.writerow([kind, seed, f"{acc:.6f}", it, st])
    man.write()
    for kind in kinds:
        accs = [r[2] for r in rows if r[0] == kind]
        if accs:
            print(f"{kind:9s} mean accuracy {np.mean(accs):.4f} over {len(accs)} seed(s)")
    return 0 if ok else 1


def cmd_sched_bench(args) -> int:
    rc = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kinds = args.scheduler or ["ring", "tree", "chain"]
    counts = args.devices or [rc.sim.num_devices]
    man = RunManifest("sched-bench", args.config, args.seeds, str(out), ",".join(kinds))
    ok = True
    for n in counts:
        cfg = rc.sim.with_(num_devices=n, busy_enabled=True, max_iterations=args.iterations)
        groups = {}
        for kind in kinds:
            groups[kind] = []
            for seed in args.seeds:
                key = f"n{n}/{kind}/seed{seed}"
                try:
                    tr = run_experiment(cfg.with_(seed=seed), rc.train, kind, rc.rl)
                except Exception as exc:
                    log.error("%s failed: %s", key, exc)
                    man.status[key] = f"error: {exc}"
                    ok = False
                    continue
                man.status[key] = "aborted" if tr.aborted else "ok"
                ok &= not tr.aborted
                groups[kind].append(tr)
        groups = {k: v for k, v in groups.items() if v}
        if not groups:
            continue
        summary = compare_schedulers(groups)
        stem = out / f"summary_n{n}"
        summary.write_json(stem.with_suffix(".json"))
        summary.write_csv(stem.with_suffix(".csv"))
        summary.write_gnuplot(stem.with_suffix(".dat"))
        peaks = {k: max(max(peak_concurrency(tr).values()) for tr in v) for k, v in groups.items()}
        print(f"N={n}")
        for name, st in summary.rows.items():
            print(f"  {name:8s} makespan {st.makespan_mean:9.1f} +- {st.makespan_std:7.1f}  "
                  f"energy var {st.energy_var_mean:8.4f}  objective {st.objective:7.3f}  peak {peaks[name]}")
        for name, d in summary.deltas.items():
            print(f"  {name}: makespan {100 * d['makespan']:+.1f}%  energy variance {100 * d['energy_variance']:+.1f}%")
    man.write()
    return 0 if ok else 1


def cmd_rl(args) -> int:
    rc = _load(args)
    out = Path(args.out)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    n = args.devices or rc.sim.num_devices
    strategies = args.strategy or ["dge", "tge", "tdge"]
    man = RunManifest("rl", args.config, args.seeds, str(out), None, asdict(rc.rl))
    episodes: dict[str, list[int]] = {}
    with open(out / "episodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "seed", "episodes_to_converge", "converged", "switched_at"])
        for st in strategies:
            episodes[st] = []
            for seed in args.seeds:
                cfg = rc.rl.with_(strategy=st, seed=seed)
                res = train_agent(SchedEnv(n, (), cfg), cfg)
                res.write_curve(out / "curves" / f"{st}_seed{seed}.csv")
                episodes[st].append(res.episodes_to_converge)
                w.writerow([st, seed, res.episodes_to_converge, int(res.converged), res.switched_at])
                man.status[f"{st}/seed{seed}"] = "ok"
    means = {st: float(np.mean(v)) for st, v in episodes.items()}
    for st, m in means.items():
        ratio = means.get("dge", m) / m if m else float("nan")
        print(f"{st:5s} mean episodes to converge {m:7.1f}  (dge / {st} = {ratio:.2f})")
    if args.calibrate_phi:
        with open(out / "phi_calibration.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "strategy", "mean_episodes", "converged_runs"])
            for phi in args.calibrate_phi:
                for st in [s for s in strategies if s != "dge"] or ["tdge"]:
                    eps, conv = [], 0
                    for seed in args.seeds:
                        cfg = rc.rl.with_(strategy=st, seed=seed, phi=phi)
                        res = train_agent(SchedEnv(n, (), cfg), cfg)
                        eps.append(res.episodes_to_converge)
                        conv += res.converged
                    w.writerow([f"{phi:g}", st, f"{np.mean(eps):.2f}", conv])
                    print(f"phi={phi:g} {st}: {np.mean(eps):.1f} episodes ({conv}/{len(eps)} converged)")
    man.write()
    return 0


def main(argv=None) -> int:
    level = os.environ.get("CHAINREDUCE_LOG", "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        handler = {"train": cmd_train, "sched-bench": cmd_sched_bench, "rl": cmd_rl}[args.command]
        return handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
