"""Ring / tree / chain scheduling: iteration makespan and per-iteration energy variance.

Every scheduler sees the same busy pattern, training times and minibatches for a
given seed, so the differences come from the plans alone.

    python scripts/scheduler_benchmark.py --devices 4,6,8 --seeds 50
"""
import argparse
import csv
import time

from chainreduce.metrics import compare_schedulers, peak_concurrency
from chainreduce.params import TrainHyper
from chainreduce.sim import SimConfig, run_seeds


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--devices", default="4,6,8")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--iterations", type=int, default=4)
    ap.add_argument("--busy-cap", type=float, default=0.5)
    ap.add_argument("--out", default="scheduler_benchmark.csv")
    args = ap.parse_args()

    t0 = time.time()
    rows = []
    for n in [int(x) for x in args.devices.split(",")]:
        cfg = SimConfig(num_devices=n, max_iterations=args.iterations, busy_cap=args.busy_cap)
        groups = {s: run_seeds(cfg, range(args.seeds), TrainHyper(epochs=1), s) for s in ("ring", "tree", "chain")}
        sm = compare_schedulers(groups)
        for name, st in sm.rows.items():
            peak = max(max(peak_concurrency(tr).values()) for tr in groups[name])
            rows.append((n, name, st.makespan_mean, st.makespan_std, st.energy_var_mean, st.energy_var_std,
                         st.objective, peak))
            print(f"N={n} {name:5s} makespan {st.makespan_mean:8.1f} +- {st.makespan_std:6.1f}  "
                  f"energy var {st.energy_var_mean:.3f}  objective {st.objective:.3f}  peak {peak}")
        for k, d in sm.deltas.items():
            print(f"      {k}: makespan {100 * d['makespan']:+.1f}%, energy variance {100 * d['energy_variance']:+.1f}%")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["devices", "scheduler", "makespan_mean", "makespan_std", "energy_var_mean", "energy_var_std",
                    "objective", "peak_concurrency"])
        w.writerows(rows)
    print(f"{time.time() - t0:.0f}s")


if __name__ == "__main__":
    main()
