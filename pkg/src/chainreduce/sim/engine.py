"""Discrete-event simulation of the mesh: local training, scheduled reduce, broadcast, faults.

One ``MeshSim`` runs a whole training job.  Each iteration is

1. local training on every live device (barrier on the slowest one),
2. the reduce, executed pair by pair according to the scheduler's plan
   (or all-to-MA for ``central``),
3. the SGD update on the MA and a binomial broadcast of the new weights.

Busy periods come from ``BusyProcess`` and depend only on the seed, so two
runs that differ only in the scheduler see the same busy pattern, the same
training times and the same minibatches.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from chainreduce.params import ParamVector, TrainHyper, central_aggregate, neighbor_aggregate, pair_aggregate, sgd_step
from chainreduce.resources import (
    DeviceState, EnergyEvent, EnergyMeter, ResourceReport, classify, event_cost, transition,
)
from chainreduce.scheduler.agent import Agent, relearn_if_changed
from chainreduce.scheduler.env import RLConfig, SchedEnvState
from chainreduce.scheduler.plans import SchedulePlan, ring_plan, star_plan, tree_plan
from chainreduce.sim.broadcast import broadcast_global
from chainreduce.sim.busy import BusyProcess
from chainreduce.sim.config import SimConfig
from chainreduce.sim.events import EventQueue, SimEvent
from chainreduce.sim.trace import Checkpoint, IterationRecord, SimTrace
from chainreduce.toy import (
    Layout, ToyModel, batches_per_epoch, epoch_batches, evaluate, forward_loss_grad, generate_blobs,
    partition_dataset,
)

log = logging.getLogger(__name__)

SCHEDULERS = ("central", "chain", "neighbor", "ring", "tree")
S = DeviceState


class SchedulingError(RuntimeError):
    pass


class AllDropped(RuntimeError):
    pass


@functools.lru_cache(maxsize=16)
def pretrained_agent(n: int, rl: RLConfig) -> Agent:
    """One agent per (N, config), trained on the all-Free environment and shared across runs."""
    return Agent.train(n, rl)


def message_bytes(num_params: int, header: int) -> int:
    return num_params * 8 + header


class MeshSim:
    def __init__(self, cfg: SimConfig, hyper: TrainHyper = TrainHyper(), scheduler: str = "chain",
                 rl: RLConfig | None = None, agent: Agent | None = None,
                 checkpoint_dir: str | Path | None = None, keep_gradients: bool = False):
        if scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {scheduler!r}")
        self.cfg, self.hyper, self.scheduler = cfg, hyper, scheduler
        self.rl = rl or RLConfig()
        n = self.n = cfg.num_devices
        self.ds = generate_blobs(cfg.num_classes, cfg.per_class, cfg.dim, cfg.spread, cfg.data_seed)
        self.layout = Layout(self.ds.dim, cfg.hidden, cfg.num_classes)
        self.partition = partition_dataset(self.ds, n, seed=cfg.data_seed)
        self.weights = ToyModel.init(self.layout, cfg.seed).weights
        self.msg_bytes = message_bytes(self.layout.size, cfg.header_bytes)
        self.batch_rngs = [np.random.default_rng([cfg.seed, 0xDA7A, d]) for d in range(n)]
        self.busy = BusyProcess(n, cfg.busy_mean, cfg.free_mean, cfg.busy_cap, cfg.seed, cfg.busy_enabled)
        self.queue = EventQueue()
        self.trace = SimTrace(scheduler, cfg.seed, {"sim": cfg.to_dict(), "train": asdict(hyper)})
        self.meters = [EnergyMeter() for _ in range(n)]
        self.lifecycle = [S.FREE] * n
        self.live = set(range(n))
        self.dropped: dict[int, float] = {}
        self.skipped: set[int] = set()
        self.pending_rejoin: set[int] = set()
        self.device_weights = {d: self.weights for d in range(n)}
        self.checkpoints: dict[int, Checkpoint] = {}
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.keep_gradients = keep_gradients
        self.ma = cfg.ma_device
        self.view: dict[int, ResourceReport] = {}
        self.iteration = 0
        self.agent = agent
        if scheduler == "chain" and self.agent is None:
            self.agent = pretrained_agent(n, self.rl)
        self.prev_bits = tuple(False for _ in range(n))
        self._phase = "idle"
        self._rec: IterationRecord | None = None
        self._inflight: dict[int, dict] = {}
        self._holders: dict[int, ParamVector] = {}
        self._todo: list = []
        self._blocked = False
        self._last_t = 0.0
        self._tok = 0
        self._setup_events()

    # ------------------------------------------------------------------ plumbing
    def _setup_events(self) -> None:
        cfg = self.cfg
        for d in range(self.n):
            self.queue.push(SimEvent(cfg.report_period * d / self.n, "ReportDue", d))
            nxt = self.busy.next_change(d, 0.0)
            if nxt is not None:
                self.queue.push(SimEvent(nxt, "BusyToggle", d))
            self.view[d] = self._report(d, 0.0)
        for f in sorted(cfg.fault_script, key=lambda f: f.time):
            self.queue.push(SimEvent(f.time, "Fault", f.device, {"action": f.kind}))

    def _log(self, ev: SimEvent) -> None:
        self.trace.events.append(ev)

    def charge(self, d: int, event: EnergyEvent) -> None:
        component, cost = event_cost(event, self.cfg.energy)
        comps = self.meters[d].components
        comps[component] += cost
        self.trace.energy_log.append((self.queue.now, d, event.kind, event.amount, component, cost))

    def _set_state(self, d: int, new: DeviceState) -> None:
        self.lifecycle[d] = transition(self.lifecycle[d], new)

    def _sync_busy(self, d: int) -> None:
        """Keep the lifecycle Busy flag in line with the resource process when idle."""
        busy = self.busy.is_busy(d, self.queue.now)
        if busy and self.lifecycle[d] is S.FREE:
            self._set_state(d, S.BUSY)
        elif not busy and self.lifecycle[d] is S.BUSY:
            self._set_state(d, S.FREE)

    def _report(self, d: int, t: float) -> ResourceReport:
        battery = max(0.0, 100.0 * (1.0 - self.meters[d].consumed / self.cfg.battery_capacity))
        busy = self.busy.is_busy(d, t)
        return ResourceReport(free_memory=1024.0 - 64.0 * (d % 4), battery=battery, in_use=busy,
                              charging=False, cpu=95.0 if busy else 20.0, timestamp=t)

    def _send_report(self, d: int) -> None:
        now = self.queue.now
        rep = self._report(d, now)
        self.charge(d, EnergyEvent("report"))
        self.queue.push(SimEvent(now + self.cfg.control_latency, "MsgArrive", d, {"report": rep}))

    def _pair_time(self) -> float:
        return self.cfg.data_base_latency + self.msg_bytes / self.cfg.data_bandwidth

    # ------------------------------------------------------------------ event loop
    def _step(self) -> None:
        ev = self.queue.pop()
        self._advance(ev.time)
        self._log(ev)
        getattr(self, "_on_" + ev.kind)(ev)

    def _on_ReportDue(self, ev: SimEvent) -> None:
        d = ev.device
        if d in self.live:
            self._send_report(d)
        self.queue.push(SimEvent(ev.time + self.cfg.report_period, "ReportDue", d))

    def _on_BusyToggle(self, ev: SimEvent) -> None:
        d = ev.device
        nxt = self.busy.next_change(d, ev.time)
        if nxt is not None:
            self.queue.push(SimEvent(nxt, "BusyToggle", d))
        if d in self.live:
            self._sync_busy(d)
            self._send_report(d)
        if self._phase == "reduce":
            self._try_start()

    def _on_MsgArrive(self, ev: SimEvent) -> None:
        p = ev.payload
        if "report" in p:
            self.view[ev.device] = p["report"]
            return
        tok = p["token"]
        if tok not in self._inflight:
            return  # cancelled by a fault
        s, r = self._inflight[tok]["pair"]
        self.charge(r, EnergyEvent("receive", self.msg_bytes))
        self.queue.push(SimEvent(ev.time + self.cfg.agg_compute, "AggDone", r, {"token": tok}))

    def _on_TrainEnd(self, ev: SimEvent) -> None:
        d = ev.device
        if d not in self._training:
            return
        self._training.discard(d)
        self._grads[d] = ev.payload["grad"]
        self._t_train_end = ev.time

    def _on_AggDone(self, ev: SimEvent) -> None:
        tok = ev.payload["token"]
        job = self._inflight.pop(tok, None)
        if job is None:
            return
        self.trace.agg_intervals.append((job["start"], ev.time) + tuple(job["pair"]))
        if self.scheduler == "central":
            self._central_done(job)
            return
        s, r = job["pair"]
        self.charge(r, EnergyEvent("aggregate"))
        incoming = self._holders.pop(s)
        if self.scheduler == "neighbor":
            own = self._holders[r]
            mid = neighbor_aggregate(own, [incoming], 1)
            self._holders[r] = ParamVector(mid.values, own.theta + incoming.theta)
        else:
            self._holders[r] = pair_aggregate(self._holders[r], incoming)
        self._contrib[r] |= self._contrib.pop(s)
        self._set_state(s, S.DONE)
        self._set_state(r, S.FREE)
        self._sync_busy(r)
        self._try_start()

    def _on_Fault(self, ev: SimEvent) -> None:
        action = ev.payload["action"]
        d = ev.device
        if action == "drop":
            self._drop(d)
        elif action == "reconnect":
            self._reconnect(d)
        elif action == "rejoin":
            self._rejoin(d)

    # ------------------------------------------------------------------ faults
    def _drop(self, d: int) -> None:
        now = self.queue.now
        if d not in self.live:
            log.warning("drop of device %d ignored: not live", d)
            return
        held = self._holders.get(d) if self._phase == "reduce" else None
        theta = held.theta if held is not None else 1.0
        ck = Checkpoint(d, self.iteration, self.device_weights[d], theta, self.batch_rngs[d].bit_generator.state)
        self.checkpoints[d] = ck
        if self._rec is not None:
            self._rec.checkpoints[d] = self._save_checkpoint(ck)
        self.live.discard(d)
        self.pending_rejoin.discard(d)
        self.dropped[d] = now
        log.info("t=%.1f device %d dropped (iteration %d, phase %s)", now, d, self.iteration, self._phase)
        if d == self.ma and self.live:
            self.ma = min(self.live)
            log.info("MA re-elected: %d", self.ma)
        if self._phase == "train":
            self._training.discard(d)
            self._participants.discard(d)
        elif self._phase == "reduce":
            self._recover_reduce(d)

    def _save_checkpoint(self, ck: Checkpoint) -> str:
        if self.checkpoint_dir is None:
            return f"memory:{ck.device}:{ck.iteration}"
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        path = self.checkpoint_dir / f"dev{ck.device}_it{ck.iteration}.json"
        ck.save(path)
        return str(path)

    def _attempt_times(self, d: int) -> list[float]:
        t0, b = self.dropped[d], self.cfg.reconnect_backoff
        return [t0 + b * 2 ** k for k in range(self.cfg.reconnect_attempts)]

    def _reconnect(self, d: int) -> None:
        now = self.queue.now
        if d not in self.dropped:
            log.warning("reconnect of device %d ignored: it never dropped", d)
            self._log(SimEvent(now, "Fault", d, {"action": "reconnect-noop"}))
            return
        if d in self.skipped:
            return
        ok = [t for t in self._attempt_times(d) if t >= now]
        if not ok:
            self.skipped.add(d)
            log.warning("device %d reconnected after the MA gave up; it stays skipped", d)
            self._log(SimEvent(now, "Fault", d, {"action": "skipped"}))
            return
        self.queue.push(SimEvent(ok[0], "Fault", d, {"action": "rejoin"}))

    def _rejoin(self, d: int) -> None:
        if d not in self.dropped or d in self.skipped:
            return
        ck = self.checkpoints[d]
        self.batch_rngs[d].bit_generator.state = ck.rng_state
        self.device_weights[d] = ck.weights
        del self.dropped[d]
        self.live.add(d)
        self.pending_rejoin.add(d)
        self.lifecycle[d] = S.FREE  # recovery reset
        self._sync_busy(d)
        log.info("device %d back online; joins at the next broadcast", d)

    def _recover_reduce(self, d: int) -> None:
        """Cancel work touching ``d``, put lost contributors back, and replan.

        If ``d`` was already merged into another holder, that holder is
        dissolved too, so the survivor only ever covers live devices.
        """
        host = next((h for h, c in self._contrib.items() if d in c), d)
        gone = {d, host}
        for tok, job in list(self._inflight.items()):
            if gone & set(job["pair"]):
                del self._inflight[tok]
                for x in job["pair"]:
                    if x != d:
                        self.lifecycle[x] = S.FREE  # recovery reset
                        self._sync_busy(x)
        if self.scheduler == "central":
            self._holders.pop(d, None)
            self._contrib.pop(d, None)
            if d == self._central_ma or not self._holders:
                self._central_restart()
            return
        lost = self._contrib.pop(host, set()) - {d}
        self._holders.pop(host, None)
        for x in sorted(lost):
            if x in self.live:
                self._holders[x] = self._own[x]
                self._contrib[x] = {x}
                self.lifecycle[x] = S.FREE  # recovery reset: back in the reduce
                self._sync_busy(x)
        self._rec.replans += 1
        self._replan()

    # ------------------------------------------------------------------ planning
    def _snapshot_busy(self) -> frozenset:
        return frozenset(d for d, rep in self.view.items() if d in self.live and classify(rep, self.cfg.busy_policy) is S.BUSY)

    def make_plan(self, holders: list[int]) -> SchedulePlan:
        holders = sorted(holders)
        if len(holders) < 2:
            return SchedulePlan(holders, [], [], self.scheduler)
        if self.scheduler in ("ring", "neighbor"):
            return ring_plan(holders)
        if self.scheduler == "tree":
            return tree_plan(holders)
        busy = self._snapshot_busy() & set(holders)
        bits = tuple(i in busy for i in range(self.n))
        self.agent = relearn_if_changed(self.prev_bits, bits, self.agent)
        self.prev_bits = bits
        absent = [i for i in range(self.n) if i not in holders]
        snap = SchedEnvState.initial(self.n, busy, absent)
        return self.agent.plan(snap)

    def _replan(self) -> None:
        engaged_senders = {job["pair"][0] for job in self._inflight.values()}
        holders = [h for h in self._holders if h not in engaged_senders]
        plan = self.make_plan(holders)
        plan.validate()
        self._todo = plan.pairs()
        self._rec.plan = plan.to_dict()
        self._try_start()

    # ------------------------------------------------------------------ reduce execution
    def _advance(self, t: float) -> None:
        if self._phase == "reduce":
            dt = t - self._last_t
            if self._inflight:
                self._T_a += dt
            if self._blocked:
                self._T_b += dt
        self._last_t = t

    def _try_start(self) -> None:
        now = self.queue.now
        touched = {x for job in self._inflight.values() for x in job["pair"]}
        started = {job["pair"] for job in self._inflight.values()}
        blocked = False
        for pair in list(self._todo):
            if pair in started:
                continue
            s, r = pair
            if s in touched or r in touched:
                touched.update(pair)
                continue
            touched.update(pair)
            if s not in self.live or r not in self.live:
                raise SchedulingError(f"plan references dropped device in {pair}")
            if self.busy.is_busy(s, now) or self.busy.is_busy(r, now):
                blocked = True
                continue
            self._start_pair(pair)
        self._blocked = blocked

    def _start_pair(self, pair) -> None:
        s, r = pair
        now = self.queue.now
        for x in pair:
            if self.lifecycle[x] is S.BUSY:
                self._set_state(x, S.FREE)
        self._set_state(s, S.SEND)
        self._set_state(r, S.GET)
        tok = self._next_token()
        self._inflight[tok] = {"pair": pair, "start": now}
        self._todo.remove(pair)
        self.charge(s, EnergyEvent("send", self.msg_bytes))
        self.queue.push(SimEvent(now + self._pair_time(), "MsgArrive", r, {"token": tok, "sender": s}))

    def _next_token(self) -> int:
        self._tok += 1
        return self._tok

    # central mode: every holder uploads to the MA over one shared link, then a single mean
    def _central_restart(self) -> None:
        now = self.queue.now
        self._inflight.clear()
        self._central_ma = self.ma
        senders = [h for h in sorted(self._holders) if h != self._central_ma]
        for i, s in enumerate(senders):
            tok = self._next_token()
            self._inflight[tok] = {"pair": (s, self._central_ma), "start": now}
            self.charge(s, EnergyEvent("send", self.msg_bytes))
            done = now + self.cfg.data_base_latency + (i + 1) * self.msg_bytes / self.cfg.data_bandwidth
            self.queue.push(SimEvent(done, "MsgArrive", self._central_ma, {"token": tok, "sender": s}))
        if not senders:
            self._finish_central()

    def _central_done(self, job) -> None:
        if not self._inflight:
            self._finish_central()

    def _finish_central(self) -> None:
        ma = self._central_ma
        ids = sorted(self._holders)
        grads = [self._holders[i] for i in ids]
        for _ in range(len(ids) - 1):
            self.charge(ma, EnergyEvent("aggregate"))
        result = central_aggregate(grads)
        contrib = set(ids)
        self._holders = {ma: result}
        self._contrib = {ma: contrib}
        self._todo = []

    # ------------------------------------------------------------------ iteration
    def run_until(self, predicate) -> None:
        while not predicate():
            if not self.queue:
                raise RuntimeError("event queue drained")
            self._step()

    def _local_gradient(self, d: int, batches: list[np.ndarray]) -> ParamVector:
        X, y = self.ds.X, self.ds.y
        w = self.weights
        acc = np.zeros(len(w))
        for k, idx in enumerate(batches):
            _, g = forward_loss_grad(ToyModel(w, self.layout), X[idx], y[idx])
            acc += g.values
            if k + 1 < len(batches):
                w = sgd_step(w, g, self.hyper.eta)
        return ParamVector(acc)

    def run_iteration(self, epoch: int, batches: dict[int, list[np.ndarray]]) -> IterationRecord:
        cfg = self.cfg
        t0 = self.queue.now
        participants = sorted(d for d in self.live if d not in self.pending_rejoin)
        if not participants:
            raise AllDropped("no live devices")
        rec = self._rec = IterationRecord(self.iteration, epoch, t0, participants)
        before = [m.consumed for m in self.meters]
        for d in range(self.n):
            if self.lifecycle[d] is S.DONE:
                self.lifecycle[d] = S.FREE  # iteration reset
            if d in self.live:
                self._sync_busy(d)

        # 1. local training
        self._phase = "train"
        self._participants = set(participants)
        self._training = set(participants)
        self._grads: dict[int, ParamVector] = {}
        self._t_train_end = t0
        for d in participants:
            rng = np.random.default_rng([cfg.seed, 0x71E, d, self.iteration])
            scale = cfg.train_time_scale[d] if cfg.train_time_scale else 1.0
            dt = len(batches[d]) * cfg.train_time_mean * scale * (1 + cfg.train_time_jitter * rng.uniform(-1, 1))
            self.charge(d, EnergyEvent("train", dt))
            grad = self._local_gradient(d, batches[d])
            self.queue.push(SimEvent(t0 + dt, "TrainEnd", d, {"grad": grad}))
        self.run_until(lambda: not self._training)
        if not self._participants:
            raise AllDropped("every participant dropped during training")
        rec.T_tr = self._t_train_end - t0

        # 2. reduce
        t1 = self.queue.now = max(self.queue.now, self._t_train_end)
        self._own = {d: self._grads[d] for d in self._participants}
        self._holders = dict(self._own)
        self._contrib = {d: {d} for d in self._holders}
        self._inflight = {}
        self._todo = []
        self._T_a = self._T_b = 0.0
        self._blocked = False
        self._last_t = t1
        self._phase = "reduce"
        if self.scheduler == "central":
            rec.plan = star_plan(sorted(self._holders), self.ma).to_dict()
            self._central_restart()
        else:
            self._replan()
        self.run_until(lambda: len(self._holders) <= 1 and not self._inflight)
        if not self._holders:
            raise AllDropped("every participant dropped during the reduce")
        self._phase = "bcast"
        (survivor, global_grad), = self._holders.items()
        rec.survivor = survivor
        rec.theta = global_grad.theta
        rec.contributors = sorted(self._contrib[survivor])
        rec.T_a, rec.T_b = self._T_a, self._T_b
        rec.agg_span = self.queue.now - t1
        if self.keep_gradients:
            self.trace.gradients.append({d: self._own[d].values.copy() for d in rec.contributors})

        # 3. update on the MA and broadcast
        t2 = self.queue.now
        ma = self.ma
        hop = self._pair_time()
        t_ma = t2
        if survivor != ma:
            self.charge(survivor, EnergyEvent("send", self.msg_bytes))
            self.charge(ma, EnergyEvent("receive", self.msg_bytes))
            t_ma += hop
        self.weights = sgd_step(self.weights, global_grad, self.hyper.eta)
        self.device_weights[ma] = self.weights
        recipients = sorted(d for d in self.live if d != ma)
        upcoming = {f.device: f.time for f in cfg.fault_script if f.kind == "drop" and f.time >= t_ma}
        bc = broadcast_global(ma, recipients, self.view, hop, t_ma, upcoming)
        for h in bc.hops:
            self.charge(h.src, EnergyEvent("send", self.msg_bytes))
            if h.ok:
                self.charge(h.dst, EnergyEvent("receive", self.msg_bytes))
                self.queue.push(SimEvent(h.arrived, "BroadcastHop", h.dst, {"src": h.src, "ok": True}))
            else:
                self.queue.push(SimEvent(h.arrived, "BroadcastHop", h.dst, {"src": h.src, "ok": False}))
        self.trace.broadcasts.append({"iteration": self.iteration, "ma": ma, "direct_sends": bc.direct_sends,
                                      "hops": len(bc.hops), "delivered": bc.delivered()})
        end = bc.end
        self.run_until(lambda: self.queue.peek_time() is None or self.queue.peek_time() > end)
        self.queue.now = max(self.queue.now, end)
        for d in bc.received:
            if d in self.live:
                self.device_weights[d] = self.weights
                self.pending_rejoin.discard(d)
        rec.broadcast = end - t2
        self._phase = "idle"
        rec.energy = {d: self.meters[d].consumed - before[d] for d in range(self.n)}
        self.trace.records.append(rec)
        self._rec = None
        self.iteration += 1
        return rec

    def _on_BroadcastHop(self, ev: SimEvent) -> None:
        pass

    def run(self) -> SimTrace:
        cfg, hyper = self.cfg, self.hyper
        sizes = self.partition.sizes()
        nb = batches_per_epoch(max(sizes.values()), hyper.batch_size)
        per_iter = 1 if hyper.agg_rounds_per_epoch is None else max(1, math.ceil(nb / hyper.agg_rounds_per_epoch))
        X_test, y_test = self.ds.test()
        try:
            for epoch in range(hyper.epochs):
                plan = {d: epoch_batches(self.partition.indices(d), hyper.batch_size, nb, self.batch_rngs[d])
                        for d in range(self.n)}
                for lo in range(0, nb, per_iter):
                    if cfg.max_iterations is not None and self.iteration >= cfg.max_iterations:
                        break
                    self.run_iteration(epoch, {d: plan[d][lo:lo + per_iter] for d in range(self.n)})
                self.trace.epoch_weights.append(self.weights.values.copy())
                self.trace.epoch_accuracy.append(evaluate(ToyModel(self.weights, self.layout), X_test, y_test))
                if cfg.max_iterations is not None and self.iteration >= cfg.max_iterations:
                    break
        except AllDropped as exc:
            log.error("run aborted: %s", exc)
            self.trace.aborted = True
        self.trace.meters = [EnergyMeter(dict(m.components)) for m in self.meters]
        self.trace.final_weights = self.weights.values.copy()
        self.trace.final_accuracy = evaluate(ToyModel(self.weights, self.layout), X_test, y_test)
        self.trace.device_weights = {d: w.values.copy() for d, w in self.device_weights.items()}
        self.trace.end_time = self.queue.now
        return self.trace


def run_experiment(cfg: SimConfig, hyper: TrainHyper = TrainHyper(), scheduler: str = "chain",
                   rl: RLConfig | None = None, **kw) -> SimTrace:
    return MeshSim(cfg, hyper, scheduler, rl, **kw).run()


def run_seeds(cfg: SimConfig, seeds, hyper: TrainHyper = TrainHyper(), scheduler: str = "chain",
              rl: RLConfig | None = None, **kw) -> list[SimTrace]:
    """One trace per seed; each seed drives its own busy, timing and data-order streams."""
    seeds = list(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    return [run_experiment(cfg.with_(seed=s), hyper, scheduler, rl, **kw) for s in seeds]
