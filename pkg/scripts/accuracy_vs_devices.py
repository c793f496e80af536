"""Final test accuracy of central, chain and neighbor aggregation as the device count grows.

    python scripts/accuracy_vs_devices.py --devices 3,6,9 --seeds 5 --epochs 10
"""
import argparse
import csv

import numpy as np

from chainreduce.params import TrainHyper
from chainreduce.sim import SimConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--devices", default="3,6,9")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--out", default="accuracy_vs_devices.csv")
    args = ap.parse_args()

    hyper = TrainHyper(epochs=args.epochs)
    rows = []
    for n in [int(x) for x in args.devices.split(",")]:
        cfg = SimConfig(num_devices=n, busy_enabled=False)
        for mode in ("central", "chain", "neighbor"):
            accs = [run_experiment(cfg.with_(seed=s), hyper, mode).final_accuracy for s in range(args.seeds)]
            rows.append((n, mode, float(np.mean(accs)), float(np.std(accs))))
            print(f"N={n:2d} {mode:8s} accuracy {np.mean(accs):.4f} +- {np.std(accs):.4f}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["devices", "mode", "accuracy_mean", "accuracy_std"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
