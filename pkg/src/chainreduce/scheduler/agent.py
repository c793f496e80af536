"""Q-learning agent for the aggregation-ordering MDP.

``DenseQ`` is a small two-layer network with a target copy and replay buffer;
``TabularQ`` is an exact table for tiny networks used to cross-check it.
Exploration follows one of three epsilon schedules:

dge   epsilon decays every epoch from ``epsilon0``.
tge   epsilon stays at 1.0 until an episode beats the threshold, then is fixed
      at ``epsilon_new``.
tdge  like tge, but decays from ``epsilon_new`` after the switch.
"""
from __future__ import annotations

import copy
import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from chainreduce.scheduler.env import (
    RLConfig, SchedEnv, SchedEnvState, encode, encoded_size, env_step, threshold, valid_actions,
)
from chainreduce.scheduler.plans import SchedulePlan, pack_rounds, tree_plan

log = logging.getLogger(__name__)


class DenseQ:
    """state encoding -> one Q-value per device, trained with Adam on TD targets."""

    kind = "dense"

    def __init__(self, n: int, cfg: RLConfig, rng: np.random.Generator):
        self.n = n
        self.cfg = cfg
        d, h = encoded_size(n), cfg.hidden
        self.params = {
            "w1": rng.standard_normal((d, h)) * np.sqrt(2.0 / d),
            "b1": np.zeros(h),
            "w2": rng.standard_normal((h, n)) * np.sqrt(1.0 / h),
            "b2": np.zeros(n),
        }
        self.target = {k: v.copy() for k, v in self.params.items()}
        self._m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.updates = 0
        self.buffer: deque = deque(maxlen=cfg.buffer_size)

    @staticmethod
    def _forward(p, x):
        pre = x @ p["w1"] + p["b1"]
        hid = np.maximum(pre, 0.0)
        return hid @ p["w2"] + p["b2"], pre, hid

    def values(self, state: SchedEnvState) -> np.ndarray:
        return self._forward(self.params, encode(state)[None, :])[0][0]

    def remember(self, s, a, r, s2, done) -> None:
        self.buffer.append((encode(s), a, r, encode(s2), done))

    def learn(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        if len(self.buffer) < cfg.batch_size:
            return
        idx = rng.integers(0, len(self.buffer), cfg.batch_size)
        batch = [self.buffer[i] for i in idx]
        x = np.stack([b[0] for b in batch])
        a = np.array([b[1] for b in batch])
        r = np.array([b[2] for b in batch])
        x2 = np.stack([b[3] for b in batch])
        done = np.array([b[4] for b in batch], dtype=bool)

        q_next = self._forward(self.target, x2)[0].max(axis=1)
        target = r + cfg.discount * np.where(done, 0.0, q_next)
        q, pre, hid = self._forward(self.params, x)
        rows = np.arange(len(a))
        err = q[rows, a] - target
        dq = np.zeros_like(q)
        dq[rows, a] = np.clip(err, -1.0, 1.0) / len(a)  # Huber gradient
        p = self.params
        grads = {"w2": hid.T @ dq, "b2": dq.sum(axis=0)}
        dpre = (dq @ p["w2"].T) * (pre > 0)
        grads["w1"] = x.T @ dpre
        grads["b1"] = dpre.sum(axis=0)
        self._adam(grads)
        self.updates += 1
        if self.updates % cfg.target_sync == 0:
            self.target = {k: v.copy() for k, v in self.params.items()}

    def _adam(self, grads, b1=0.9, b2=0.999, eps=1e-8) -> None:
        t = self.updates + 1
        lr = self.cfg.learn_rate
        for k, g in grads.items():
            self._m[k] = b1 * self._m[k] + (1 - b1) * g
            self._v[k] = b2 * self._v[k] + (1 - b2) * g * g
            mhat = self._m[k] / (1 - b1 ** t)
            vhat = self._v[k] / (1 - b2 ** t)
            self.params[k] = self.params[k] - lr * mhat / (np.sqrt(vhat) + eps)

    def state_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "updates": self.updates,
                "params": {k: v.tolist() for k, v in self.params.items()}}

    def load_state_dict(self, d: dict) -> None:
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in d["params"].items()}
        self.target = {k: v.copy() for k, v in self.params.items()}
        self.updates = int(d.get("updates", 0))

    def snapshot(self) -> "DenseQ":
        """Copy of the weights for inference; the replay buffer is shared."""
        other = copy.copy(self)
        other.params = {k: v.copy() for k, v in self.params.items()}
        other.target = {k: v.copy() for k, v in self.target.items()}
        other._m, other._v = dict(self._m), dict(self._v)
        return other

    def clone(self) -> "DenseQ":
        other = copy.copy(self)
        other.params = {k: v.copy() for k, v in self.params.items()}
        other.target = {k: v.copy() for k, v in self.target.items()}
        other._m = {k: v.copy() for k, v in self._m.items()}
        other._v = {k: v.copy() for k, v in self._v.items()}
        other.buffer = deque(self.buffer, maxlen=self.buffer.maxlen)
        return other


def _state_key(state: SchedEnvState) -> tuple:
    return (tuple(s.value for s in state.states), state.n_agg, state.pending, state.t)


class TabularQ:
    """Exact Q-table; only sensible for N <= 4."""

    kind = "tabular"

    def __init__(self, n: int, cfg: RLConfig, rng: np.random.Generator | None = None, lr: float = 0.5):
        self.n = n
        self.cfg = cfg
        self.lr = lr
        self.table: dict[tuple, np.ndarray] = {}
        self.updates = 0
        self._last = None

    def values(self, state: SchedEnvState) -> np.ndarray:
        return self.table.get(_state_key(state), np.zeros(self.n))

    def remember(self, s, a, r, s2, done) -> None:
        self._last = (s, a, r, s2, done)

    def learn(self, rng=None) -> None:
        if self._last is None:
            return
        s, a, r, s2, done = self._last
        key = _state_key(s)
        row = self.table.setdefault(key, np.zeros(self.n))
        target = r if done else r + self.cfg.discount * self.values(s2).max()
        row[a] += self.lr * (target - row[a])
        self.updates += 1
        self._last = None

    def state_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "updates": self.updates,
                "table": [[list(map(_jsonable, k)), v.tolist()] for k, v in self.table.items()]}

    def load_state_dict(self, d: dict) -> None:
        self.table = {}
        for k, v in d["table"]:
            key = (tuple(k[0]), tuple(k[1]), k[2], k[3])
            self.table[key] = np.asarray(v)
        self.updates = int(d.get("updates", 0))

    def clone(self) -> "TabularQ":
        other = copy.copy(self)
        other.table = {k: v.copy() for k, v in self.table.items()}
        return other

    snapshot = clone


def _jsonable(x):
    return list(x) if isinstance(x, tuple) else x


def make_q(n: int, cfg: RLConfig, kind: str = "dense") -> DenseQ | TabularQ:
    rng = np.random.default_rng(cfg.seed)
    if kind == "tabular":
        return TabularQ(n, cfg, rng)
    return DenseQ(n, cfg, rng)


def greedy_action(q, state: SchedEnvState, mask: Sequence[int] | None = None) -> int:
    """Argmax Q, lowest id on ties; restricted to ``mask`` when given."""
    vals = q.values(state)
    if mask is None:
        return int(np.argmax(vals))
    mask = sorted(mask)
    return mask[int(np.argmax(vals[mask]))]


@dataclass
class TrainResult:
    q: object
    episodes_to_converge: int
    converged: bool
    curve: list[tuple[int, float, float]] = field(default_factory=list)  # (epoch, reward, epsilon)
    switched_at: int | None = None

    def write_curve(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,cumulative_reward,epsilon\n")
            for e, r, eps in self.curve:
                fh.write(f"{e},{r:.6f},{eps:.6f}\n")


class ConvergenceTracker:
    """First epoch after which the moving-average reward stays within tolerance.

    A stable stretch only counts if every episode in it completed the reduce,
    so a flat run of invalid-action episodes is not mistaken for convergence.
    """

    def __init__(self, window: int, tol: float, patience: int, floor: float):
        self.window, self.tol, self.patience, self.floor = window, tol, patience, floor
        self.rewards: list[float] = []
        self.completed: list[bool] = []
        self.prev_ma: float | None = None
        self.streak = 0
        self.converged_at: int | None = None

    def update(self, reward: float, completed: bool = True) -> bool:
        self.rewards.append(reward)
        self.completed.append(completed)
        if len(self.rewards) < self.window:
            return False
        ma = float(np.mean(self.rewards[-self.window:]))
        if self.prev_ma is not None:
            scale = max(abs(self.prev_ma), self.floor)
            stable = abs(ma - self.prev_ma) < self.tol * scale
            ok = all(self.completed[-self.window:])
            self.streak = self.streak + 1 if stable and ok else 0
            if self.streak >= self.patience and self.converged_at is None:
                self.converged_at = len(self.rewards) - self.patience
        self.prev_ma = ma
        return self.converged_at is not None


def train_agent(env: SchedEnv, cfg: RLConfig, q=None, kind: str = "dense",
                resume: bool = False) -> TrainResult:
    """Epsilon-greedy Q-learning with the configured exploration schedule.

    ``resume`` continues from an already-trained Q-function: the threshold
    strategies start past their switch (at ``epsilon_new``) instead of at 1.0.
    If the run does not converge, the best greedy policy seen is returned.
    """
    rng = np.random.default_rng(cfg.seed)
    q = q if q is not None else make_q(env.n, cfg, kind)
    tr = threshold(env.n, cfg)
    if resume:
        eps, switched_at = cfg.epsilon_new, -1
    else:
        eps, switched_at = (cfg.epsilon0 if cfg.strategy == "dge" else 1.0), None
    tracker = ConvergenceTracker(cfg.converge_window, cfg.converge_tol, cfg.converge_patience, cfg.converge_floor)
    curve = []
    best_q, best_reward = None, -np.inf
    max_steps = 2 * (env.n - 1) + 1
    for epoch in range(cfg.max_epoch):
        state = env.reset()
        total = 0.0
        for _ in range(max_steps):
            valid = valid_actions(state)
            if rng.random() < eps:
                a = int(rng.choice(valid))
            else:
                a = greedy_action(q, state)
            nxt, r, done = env.step(a)
            q.remember(state, a, r, nxt, done)
            q.learn(rng)
            total += r
            state = nxt
            if done:
                break
        if cfg.strategy in ("tge", "tdge") and switched_at is None and total > tr:
            eps = cfg.epsilon_new
            switched_at = epoch
        curve.append((epoch, total, eps))
        if cfg.strategy == "dge" or (cfg.strategy == "tdge" and switched_at is not None):
            eps *= cfg.decay
        g_total, _, g_done = greedy_episode(q, env)
        if g_done and g_total > best_reward:
            best_q, best_reward = q.snapshot(), g_total
        if cfg.converge_on == "greedy":
            hit = tracker.update(g_total, g_done)
        else:
            hit = tracker.update(total, done and len(state.live()) == 1)
        if hit and cfg.stop_on_converge:
            break
    converged = tracker.converged_at is not None
    episodes = tracker.converged_at if converged else cfg.max_epoch
    if not converged and best_q is not None:
        q = best_q
    return TrainResult(q, episodes, converged, curve, None if switched_at == -1 else switched_at)


def greedy_episode(q, env: SchedEnv) -> tuple[float, list[tuple[int, int]], bool]:
    """Unmasked greedy rollout: (total reward, pairs, completed)."""
    state = env.reset()
    total, done = 0.0, False
    for _ in range(2 * (env.n - 1) + 1):
        state, r, done = env.step(greedy_action(q, state))
        total += r
        if done:
            break
    completed = done and len(state.live()) == 1
    return total, list(state.pairs), completed


def plan_from_policy(q, snapshot: SchedEnvState, cfg: RLConfig | None = None) -> SchedulePlan:
    """Greedy rollout turned into a plan over the snapshot's non-Done devices.

    Free devices are scheduled first; Busy devices are only offered once no two
    Free devices remain.  Pairs touching a Busy device go to ``deferred``;
    the rest are packed into concurrent rounds.
    """
    cfg = cfg or RLConfig()
    busy = snapshot.busy
    devices = snapshot.live()
    state = snapshot
    try:
        while len(state.live()) > 1:
            valid = valid_actions(state)
            free = [i for i in valid if i not in busy]
            if len(free) >= 2 or (state.pending is not None and free):
                mask = free
            else:
                mask = valid
            vals = q.values(state)
            if not np.all(np.isfinite(vals)):
                raise FloatingPointError("non-finite Q-values")
            state, _, _ = _step_no_limit(state, greedy_action(q, state, mask), cfg)
    except (FloatingPointError, ValueError) as exc:
        log.warning("policy rollout failed (%s); falling back to tree plan", exc)
        return fallback_plan(devices, busy)

    pairs = list(state.pairs)
    gated = [i in busy or j in busy for i, j in pairs]
    free_pairs = [p for p, g in zip(pairs, gated) if not g]
    deferred = [p for p, g in zip(pairs, gated) if g]
    return SchedulePlan(devices, pack_rounds(free_pairs), deferred, "chain")


def _step_no_limit(state: SchedEnvState, a: int, cfg: RLConfig):
    nxt, r, done = env_step(state, a, cfg)
    if done and len(nxt.live()) != 1:
        raise ValueError(f"rollout terminated early at step {state.t}")
    return nxt, r, done


def fallback_plan(devices: Sequence[int], busy: frozenset) -> SchedulePlan:
    """Tree over the Free devices, Busy ones deferred into the tree root."""
    free = [d for d in devices if d not in busy]
    busy_ids = [d for d in devices if d in busy]
    if len(free) >= 2:
        base = tree_plan(free)
        root = base.survivor()
        return SchedulePlan(list(devices), base.rounds, [(b, root) for b in busy_ids], "chain-fallback")
    if len(free) == 1:
        return SchedulePlan(list(devices), [], [(b, free[0]) for b in busy_ids], "chain-fallback")
    return SchedulePlan(list(devices), [], tree_plan(busy_ids).pairs(), "chain-fallback")


@dataclass
class Agent:
    """A Q-function plus the snapshot it was trained for and a version counter."""

    q: object
    cfg: RLConfig
    n: int
    busy: frozenset = frozenset()
    version: int = 0
    history: list = field(default_factory=list)  # TrainResult per training slot

    @classmethod
    def train(cls, n: int, cfg: RLConfig, busy: Sequence[int] = (), kind: str = "dense") -> "Agent":
        res = train_agent(SchedEnv(n, busy, cfg), cfg, kind=kind)
        return cls(res.q, cfg, n, frozenset(busy), 0, [res])

    def plan(self, snapshot: SchedEnvState) -> SchedulePlan:
        return plan_from_policy(self.q, snapshot, self.cfg)

    def save(self, path: str | Path) -> None:
        payload = {"version": self.version, "n": self.n, "busy": sorted(self.busy),
                   "cfg": asdict(self.cfg), "q": self.q.state_dict()}
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path) -> "Agent":
        d = json.loads(Path(path).read_text())
        cfg = RLConfig(**d["cfg"])
        q = make_q(d["n"], cfg, d["q"]["kind"])
        q.load_state_dict(d["q"])
        return cls(q, cfg, d["n"], frozenset(d["busy"]), d["version"])


def relearn_if_changed(previous: SchedEnvState | Sequence[bool], current: SchedEnvState | Sequence[bool],
                       agent: Agent, epochs: int | None = None) -> Agent:
    """Retrain briefly, starting from the current Q-function, when Busy/Free bits change."""
    prev_bits = previous.busy_bits() if isinstance(previous, SchedEnvState) else tuple(previous)
    cur_bits = current.busy_bits() if isinstance(current, SchedEnvState) else tuple(current)
    if prev_bits == cur_bits:
        return agent
    busy = [i for i, b in enumerate(cur_bits) if b]
    cfg = agent.cfg.with_(max_epoch=epochs or agent.cfg.relearn_epochs, stop_on_converge=False,
                          seed=agent.cfg.seed + agent.version + 1)
    res = train_agent(SchedEnv(agent.n, busy, cfg), cfg, q=agent.q.clone(), resume=True)
    return Agent(res.q, agent.cfg, agent.n, frozenset(busy), agent.version + 1, agent.history + [res])
