"""Episodes-to-convergence and reward curves for the three exploration schedules.

    python scripts/exploration_curves.py --devices 8 --seeds 20
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from chainreduce.scheduler import RLConfig, SchedEnv, train_agent


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--devices", type=int, default=8)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--max-epoch", type=int, default=500)
    ap.add_argument("--phi", type=float, default=0.0)
    ap.add_argument("--out", default="exploration")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    means = {}
    for st in ("dge", "tge", "tdge"):
        eps, conv, curves = [], 0, []
        for seed in range(args.seeds):
            cfg = RLConfig(strategy=st, seed=seed, phi=args.phi, max_epoch=args.max_epoch)
            res = train_agent(SchedEnv(args.devices, (), cfg), cfg)
            eps.append(res.episodes_to_converge)
            conv += res.converged
            curves.append([r for _, r, _ in res.curve])
        means[st] = float(np.mean(eps))
        # mean reward per epoch over seeds
        length = min(len(c) for c in curves)
        avg = np.mean([c[:length] for c in curves], axis=0)
        with open(out / f"{st}_mean_curve.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "mean_reward"])
            w.writerows((i, f"{r:.6f}") for i, r in enumerate(avg))
        print(f"{st:5s} episodes to converge {means[st]:6.1f} (converged {conv}/{args.seeds})")
    print(f"speedup dge/tge {means['dge'] / means['tge']:.2f}x, dge/tdge {means['dge'] / means['tdge']:.2f}x")


if __name__ == "__main__":
    main()
