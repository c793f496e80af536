"""One test per acceptance criterion; each records a PASS/FAIL line shown in the run summary."""
import math
import time

import numpy as np
import pytest

from chainreduce.metrics import compare_schedulers, peak_concurrency
from chainreduce.params import ParamVector, TrainHyper, central_aggregate, chain_reduce, neighbor_aggregate
from chainreduce.resources import ResourceReport
from chainreduce.scheduler import RLConfig, SchedEnv, SchedEnvState, env_step, train_agent
from chainreduce.scheduler.env import battery_part, latency_part
from chainreduce.sim import FaultSpec, SimConfig, broadcast_global, run_experiment, run_seeds
from chainreduce.toy import Layout, ToyModel

from conftest import ACCEPTANCE


def report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


def all_schedules(holders):
    if len(holders) == 1:
        yield []
        return
    for s in holders:
        for r in holders:
            if s != r:
                rest = [h for h in holders if h != s]
                for tail in all_schedules(rest):
                    yield [(s, r)] + tail


def random_schedule(n, rng):
    holders, pairs = list(range(n)), []
    while len(holders) > 1:
        s, r = rng.choice(holders, 2, replace=False)
        pairs.append((int(s), int(r)))
        holders.remove(s)
    return pairs


def test_c01_exact_aggregation():
    t0 = time.time()
    rng = np.random.default_rng(0)
    worst, checked, ok = 0.0, 0, True
    for n in range(2, 17):
        # 100 gradient sets side by side in one vector: the reduce is elementwise
        sets = rng.normal(size=(n, 100, 4))
        grads = [ParamVector(sets[d].ravel()) for d in range(n)]
        want = central_aggregate(grads).values
        scheds = all_schedules(list(range(n))) if n <= 5 else (random_schedule(n, rng) for _ in range(50))
        for pairs in scheds:
            _, out = chain_reduce(grads, pairs)
            err = float(np.max(np.abs(out.values - want)))
            worst = max(worst, err)
            ok &= err <= 1e-12 and out.theta == n
            checked += 1
    dt = time.time() - t0
    report(1, ok and dt < 10, f"{checked} schedules x 100 gradient sets, N=2..16, max |chain - mean| = {worst:.2e}"
                              f" (tol 1e-12), theta = N, {dt:.1f}s")


def test_c02_trajectory_identity():
    t0 = time.time()
    cfg = SimConfig(num_devices=6, seed=0)
    hyper = TrainHyper(epochs=10)
    a = run_experiment(cfg, hyper, "chain")
    b = run_experiment(cfg, hyper, "central")
    diffs = [float(np.max(np.abs(x - y))) for x, y in zip(a.epoch_weights, b.epoch_weights)]
    same_acc = a.epoch_accuracy == b.epoch_accuracy and a.final_accuracy == b.final_accuracy
    dt = time.time() - t0
    ok = len(diffs) == 10 and max(diffs) <= 1e-9 and same_acc and dt < 60
    report(2, ok, f"N=6, 10 epochs, {len(a.records)} chain iterations: max weight diff {max(diffs):.2e} (tol 1e-9), "
                  f"final accuracy {a.final_accuracy:.4f} vs {b.final_accuracy:.4f}, {dt:.1f}s")


def test_c03_neighbor_degradation():
    t0 = time.time()
    hyper = TrainHyper(epochs=10)
    parts, ok = [], True
    for n in (6, 9):
        cfg = SimConfig(num_devices=n, busy_enabled=False)
        chain = np.mean([run_experiment(cfg.with_(seed=s), hyper, "chain").final_accuracy for s in range(10)])
        nb = np.mean([run_experiment(cfg.with_(seed=s), hyper, "neighbor").final_accuracy for s in range(10)])
        ok &= nb <= chain
        parts.append(f"N={n} neighbor {nb:.4f} <= chain {chain:.4f}")
    # line topology 0 -> 1 -> 2 -> 3, each hop a two-party midpoint
    acc = ParamVector(np.array([1.0]))
    for g in [2.0, 3.0, 4.0]:
        acc = neighbor_aggregate(ParamVector(np.array([g])), [acc], 1)
    gap = abs(acc.values[0] - 2.5)
    ok &= gap > 1e-6
    dt = time.time() - t0
    report(3, ok and dt < 120, f"{'; '.join(parts)} (10 seeds); line instance {acc.values[0]:.4f} vs mean 2.5 "
                               f"(gap {gap:.3f} > 1e-6), {dt:.1f}s")


@pytest.fixture(scope="module")
def benchmark():
    t0 = time.time()
    out = {}
    for n in (4, 6, 8):
        cfg = SimConfig(num_devices=n, max_iterations=4, busy_cap=0.5)
        out[n] = compare_schedulers({s: run_seeds(cfg, range(50), TrainHyper(epochs=1), s)
                                     for s in ("ring", "tree", "chain")})
    return out, time.time() - t0


def test_c04_latency_ordering(benchmark):
    sums, dt = benchmark
    ok, parts = dt < 300, []
    for n, sm in sums.items():
        ring, tree, chain = (sm.rows[k].makespan_mean for k in ("ring", "tree", "chain"))
        ok &= chain < ring and chain <= 1.15 * tree
        parts.append(f"N={n} chain {chain:.0f} / tree {tree:.0f} / ring {ring:.0f} ms "
                     f"({100 * (chain / ring - 1):+.1f}% vs ring, {100 * (chain / tree - 1):+.1f}% vs tree)")
    report(4, ok, "; ".join(parts) + f"; 50 seeds, {dt:.0f}s")


def test_c05_energy_balance(benchmark):
    sums, _ = benchmark
    ok, parts = True, []
    for n, sm in sums.items():
        ring, tree, chain = (sm.rows[k].energy_var_mean for k in ("ring", "tree", "chain"))
        ok &= chain < tree and ring <= min(tree, chain)
        parts.append(f"N={n} ring {ring:.3f} <= chain {chain:.3f} < tree {tree:.3f} "
                     f"({100 * (chain / tree - 1):+.1f}% vs tree)")
    report(5, ok, "; ".join(parts))


def test_c06_reward_units():
    cfg = RLConfig()
    s0 = SchedEnvState.initial(4)
    r1 = env_step(s0, 0, cfg)[1]
    r2 = env_step(s0.__class__(s0.states, (0, 0, 2, 0)), 2, cfg)[1]
    b = SchedEnvState.initial(5, busy=[3])
    r3 = env_step(b.__class__(b.states, b.n_agg, t=4, busy=b.busy), 3, cfg)[1]
    s = SchedEnvState.initial(3)
    s = env_step(env_step(s, 0, cfg)[0], 1, cfg)[0]
    r4 = env_step(s, 0, cfg)[1]
    got = (r1, r2, r3, r4, battery_part(8, 0.1), battery_part(7, 0.1), latency_part(8, 0.1))
    want = (-0.04, 0.16, -1.2, -1.0, 0.0, 0.2, 0.3)
    ok = all(abs(g - w) < 1e-12 for g, w in zip(got, want))
    report(6, ok, "env_step " + ", ".join(f"{g:+.2f}" for g in got[:4]) +
           f"; f(8)={got[4]:g} f(7)={got[5]:g} g(8)={got[6]:g}")


def test_c07_exploration_speedup():
    t0 = time.time()
    means, conv = {}, {}
    for st in ("dge", "tge", "tdge"):
        eps, c = [], 0
        for seed in range(20):
            cfg = RLConfig(strategy=st, seed=seed, stop_on_converge=True)
            res = train_agent(SchedEnv(8, (), cfg), cfg)
            eps.append(res.episodes_to_converge)
            c += res.converged
        means[st], conv[st] = float(np.mean(eps)), c
    dt = time.time() - t0
    ok = means["tdge"] < means["tge"] < means["dge"] and dt < 600
    report(7, ok, f"N=8, 20 seeds: episodes dge {means['dge']:.1f} / tge {means['tge']:.1f} / tdge {means['tdge']:.1f}"
                  f" (dge/tge {means['dge'] / means['tge']:.2f}x, dge/tdge {means['dge'] / means['tdge']:.2f}x; "
                  f"converged {conv['dge']}/{conv['tge']}/{conv['tdge']} of 20), {dt:.0f}s")


def test_c08_broadcast_bound():
    rng = np.random.default_rng(8)
    ok, worst, runs = True, 0, 0
    for n in range(2, 17):
        for _ in range(50):
            reps = {d: ResourceReport(free_memory=float(rng.uniform(64, 2048)), battery=float(rng.uniform(0, 100)),
                                      in_use=bool(rng.random() < 0.3), charging=bool(rng.random() < 0.5),
                                      cpu=float(rng.uniform(0, 100))) for d in range(n)}
            ma = int(rng.integers(n))
            rest = [d for d in range(n) if d != ma]
            log = broadcast_global(ma, rest, reps)
            ok &= log.direct_sends <= math.ceil(math.log2(n))
            ok &= sorted(h.dst for h in log.hops) == rest and log.delivered() == rest
            worst = max(worst, log.direct_sends - math.ceil(math.log2(n)))
            runs += 1
    report(8, ok, f"{runs} random report sets, N=2..16: MA direct sends - ceil(log2 N) <= {worst}, "
                  f"each device receives exactly once")


def _live_count_ok(tr, script):
    drops = [(f.time, f.device) for f in script if f.kind == "drop"]
    for r in tr.records:
        reduce_end = r.start + r.makespan
        live = [p for p in r.participants if not any(d == p and r.start < t <= reduce_end for t, d in drops)]
        if r.theta != len(live) or r.contributors != live:
            return False
    return True


def test_c09_fault_tolerance():
    hyper = TrainHyper(epochs=2)
    base = SimConfig(num_devices=6, seed=0, max_iterations=6)
    clean = run_experiment(base, hyper, "chain")
    r2 = clean.records[2]
    mid = r2.start + r2.T_tr + 0.5 * r2.agg_span  # inside the iteration-2 reduce
    scripts = {
        "drop 1": (FaultSpec(mid, 1, "drop"), FaultSpec(mid + 100, 1, "reconnect")),
        "drop 2": (FaultSpec(500.0, 4, "drop"), FaultSpec(mid, 1, "drop"), FaultSpec(mid + 100, 1, "reconnect")),
    }
    ok, parts = True, []
    for name, script in scripts.items():
        tr = run_experiment(base.with_(fault_script=script), hyper, "chain", keep_gradients=True)
        done = not tr.aborted and len(tr.records) == 6
        live = _live_count_ok(tr, script)
        synced = np.array_equal(tr.device_weights[1], tr.final_weights)
        lay_w = _init_weights(base)
        for rec, g in zip(tr.records, tr.gradients):
            lay_w = lay_w - hyper.eta * np.mean([g[d] for d in rec.contributors], axis=0)
        exact = np.allclose(tr.final_weights, lay_w, atol=1e-12, rtol=0)
        ok &= done and live and synced and exact
        parts.append(f"{name}: thetas {[int(r.theta) for r in tr.records]}, completed={done}, theta=live {live}, "
                     f"rejoined weights == global {synced}, update == mean of contributed {exact}")
    report(9, ok, "; ".join(parts))


def _init_weights(cfg):
    return ToyModel.init(Layout(cfg.dim, cfg.hidden, cfg.num_classes), cfg.seed).weights.values.copy()


def test_c10_peak_concurrency():
    ok, parts = True, []
    for n in (4, 8):
        cfg = SimConfig(num_devices=n, max_iterations=3)
        chain_peak = max(max(peak_concurrency(run_experiment(cfg.with_(seed=s), TrainHyper(epochs=1),
                                                             "chain")).values()) for s in range(5))
        central = [peak_concurrency(run_experiment(cfg.with_(seed=s), TrainHyper(epochs=1), "central"))[cfg.ma_device]
                   for s in range(5)]
        ok &= chain_peak == 1 and all(c == n - 1 for c in central)
        parts.append(f"N={n} chain per-device peak {chain_peak}, central MA peak {max(central)} (N-1 = {n - 1})")
    report(10, ok, "; ".join(parts) + "; 5 seeds")
