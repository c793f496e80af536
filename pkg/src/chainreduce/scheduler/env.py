"""The aggregation-ordering MDP.

One action names one device.  Two consecutive actions form a pair: the first
device becomes the sender (Free -> Send), the second the receiver
(Free -> Get).  When the pair completes the sender is Done and the receiver
returns to Free with its aggregation count ``n_agg`` incremented.  A Busy
device may be named; it is waited for (Busy -> Free) before taking its role,
the step pays the busy penalty, and the pair is flagged as deferred.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from chainreduce.resources import DeviceState, transition

S = DeviceState
STATE_ORDER = (S.FREE, S.BUSY, S.SEND, S.GET, S.DONE)


@dataclass(frozen=True)
class RLConfig:
    alpha: float = -0.04
    beta: float = 0.1
    rho: float = -0.8
    epsilon0: float = 1.0
    epsilon_new: float = 0.3
    decay: float = 0.99
    strategy: str = "tdge"  # dge | tge | tdge
    phi: float = 0.0
    max_epoch: int = 500
    discount: float = 0.95
    learn_rate: float = 1e-3
    hidden: int = 64
    batch_size: int = 32
    buffer_size: int = 10_000
    target_sync: int = 100
    converge_window: int = 10
    converge_tol: float = 0.01
    converge_patience: int = 10
    converge_floor: float = 1.0
    converge_on: str = "greedy"  # greedy | behavior
    stop_on_converge: bool = False
    relearn_epochs: int = 40
    seed: int = 0

    def __post_init__(self):
        if not self.rho < 0:
            raise ValueError("rho must be negative")
        if not 0 < self.decay < 1:
            raise ValueError("decay must be in (0, 1)")
        for name in ("epsilon0", "epsilon_new"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.converge_on not in ("greedy", "behavior"):
            raise ValueError(f"unknown converge_on {self.converge_on!r}")
        if self.strategy not in ("dge", "tge", "tdge"):
            raise ValueError(f"unknown strategy {self.strategy!r}")

    def with_(self, **kw) -> "RLConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class SchedEnvState:
    states: tuple[DeviceState, ...]
    n_agg: tuple[int, ...]
    t: int = 0
    pending: int | None = None
    pairs: tuple[tuple[int, int], ...] = ()
    deferred_flags: tuple[bool, ...] = ()
    pending_busy: bool = False
    busy: frozenset[int] = frozenset()  # devices busy in the original snapshot

    @property
    def n(self) -> int:
        return len(self.states)

    @classmethod
    def initial(cls, n: int, busy: Sequence[int] = (), absent: Sequence[int] = ()) -> "SchedEnvState":
        """Fresh episode; ``absent`` devices (dropped or already reduced) start Done."""
        if n < 2:
            raise ValueError("need at least 2 devices")
        busy, absent = frozenset(busy), frozenset(absent)
        states = tuple(S.DONE if i in absent else S.BUSY if i in busy else S.FREE for i in range(n))
        return cls(states, (0,) * n, busy=busy - absent)

    def busy_bits(self) -> tuple[bool, ...]:
        return tuple(i in self.busy for i in range(self.n))

    def live(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s is not S.DONE]


def best_steps(n: int) -> int:
    return 2 * (n - 1)


def busy_penalty(t: int, n: int, cfg: RLConfig) -> float:
    return cfg.rho + t * cfg.rho / best_steps(n)


def valid_actions(state: SchedEnvState) -> list[int]:
    """Free or Busy devices other than the pending sender (empty once reduced)."""
    if len(state.live()) < 2:
        return []
    return [i for i, s in enumerate(state.states)
            if s in (S.FREE, S.BUSY) and i != state.pending]


def env_step(state: SchedEnvState, action: int, cfg: RLConfig) -> tuple[SchedEnvState, float, bool]:
    n = state.n
    if not 0 <= action < n:
        raise ValueError(f"action {action} out of range")
    nxt_t = state.t + 1
    if action not in valid_actions(state):
        return replace(state, t=nxt_t), -1.0, True
    if state.t >= best_steps(n):
        return replace(state, t=nxt_t), -1.0, True

    states = list(state.states)
    was_busy = states[action] is S.BUSY
    if was_busy:
        states[action] = transition(states[action], S.FREE)

    if state.pending is None:
        states[action] = transition(states[action], S.SEND)
        reward = busy_penalty(state.t, n, cfg) if was_busy else cfg.alpha + cfg.beta * state.n_agg[action]
        return replace(state, states=tuple(states), t=nxt_t, pending=action, pending_busy=was_busy), reward, False

    sender = state.pending
    states[action] = transition(states[action], S.GET)
    reward = busy_penalty(state.t, n, cfg) if was_busy else cfg.alpha - cfg.beta * state.n_agg[action]
    # aggregation event completes the pair
    states[sender] = transition(states[sender], S.DONE)
    states[action] = transition(states[action], S.FREE)
    n_agg = list(state.n_agg)
    n_agg[action] += 1
    nxt = SchedEnvState(tuple(states), tuple(n_agg), nxt_t, None,
                        state.pairs + ((sender, action),),
                        state.deferred_flags + (was_busy or state.pending_busy,),
                        False, state.busy)
    if len(nxt.live()) == 1:
        return nxt, 1.0, True
    return nxt, reward, False


def battery_part(n: int, beta: float) -> float:
    """f(n) = beta * (n mod 2) + f(n // 2), f(0) = f(1) = 0."""
    total = 0.0
    while n > 1:
        total += beta * (n % 2)
        n //= 2
    return total


def latency_part(n: int, beta: float) -> float:
    return beta * math.log2(n)


def threshold(n: int, cfg: RLConfig) -> float:
    if n < 2:
        raise ValueError("threshold needs n >= 2")
    return battery_part(n, cfg.beta) + latency_part(n, cfg.beta) - cfg.phi


def encode(state: SchedEnvState) -> np.ndarray:
    """Per device: one-hot state (5), n_agg / (N-1), pending flag; then t / 2(N-1)."""
    n = state.n
    feats = np.zeros((n, 7))
    for i, s in enumerate(state.states):
        feats[i, STATE_ORDER.index(s)] = 1.0
    feats[:, 5] = np.asarray(state.n_agg) / (n - 1)
    if state.pending is not None:
        feats[state.pending, 6] = 1.0
    return np.concatenate([feats.ravel(), [state.t / best_steps(n)]])


def encoded_size(n: int) -> int:
    return 7 * n + 1


class SchedEnv:
    """Resettable wrapper over ``env_step`` for a fixed Busy/Free snapshot."""

    def __init__(self, n: int, busy: Sequence[int] = (), cfg: RLConfig | None = None, absent: Sequence[int] = ()):
        self.n = n
        self.busy = frozenset(busy)
        self.absent = frozenset(absent)
        self.cfg = cfg or RLConfig()
        self.state = SchedEnvState.initial(n, self.busy, self.absent)

    def reset(self) -> SchedEnvState:
        self.state = SchedEnvState.initial(self.n, self.busy, self.absent)
        return self.state

    def step(self, action: int) -> tuple[SchedEnvState, float, bool]:
        self.state, reward, done = env_step(self.state, action, self.cfg)
        return self.state, reward, done

    def valid_actions(self) -> list[int]:
        return valid_actions(self.state)
